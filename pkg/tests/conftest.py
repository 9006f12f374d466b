# tests/conftest.py
"""
Pytest configuration and fixtures for testing.
"""

from functools import reduce

import numpy as np
import pytest

from src.core.config import Settings
from src.services.instance import KnapsackInstance, load_scenario
from src.services.qubo import QuboModel, compile_qubo

SCENARIO_NAMES = ("scenario_1", "scenario_2", "scenario_3", "scenario_4")


class DenseOracle:
    """Full 2^n x 2^n unitaries built from Kronecker products, qubit 0 on the lowest-order bit."""

    @staticmethod
    def single(matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
        factors = [matrix if q == qubit else np.eye(2) for q in range(n)]
        return reduce(np.kron, reversed(factors))

    @staticmethod
    def product(matrices: list[np.ndarray]) -> np.ndarray:
        """Tensor product with matrices[q] acting on qubit q."""
        return reduce(np.kron, reversed(matrices))

    @staticmethod
    def cx(control: int, target: int, n: int) -> np.ndarray:
        dim = 1 << n
        u = np.zeros((dim, dim), dtype=np.complex128)
        for k in range(dim):
            u[k ^ (1 << target) if (k >> control) & 1 else k, k] = 1.0
        return u

    @staticmethod
    def diagonal_phase(energies: np.ndarray, gamma: float) -> np.ndarray:
        return np.diag(np.exp(-1j * gamma * np.asarray(energies)))

    @staticmethod
    def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
        """True when a = e^{i phi} b for one global phase phi."""
        flat_a, flat_b = a.reshape(-1), b.reshape(-1)
        k = int(np.argmax(np.abs(flat_b)))
        if abs(flat_b[k]) < atol:
            return bool(np.allclose(flat_a, flat_b, atol=atol))
        phase = flat_a[k] / flat_b[k]
        return bool(np.allclose(flat_a, phase * flat_b, atol=atol))


@pytest.fixture
def test_settings() -> Settings:
    """Settings built from defaults only, ignoring any local .env file."""
    return Settings(_env_file=None)


@pytest.fixture
def oracle() -> DenseOracle:
    return DenseOracle()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def minimal_instance() -> KnapsackInstance:
    """N=1, M=1, w=1, v=3, c=1: two qubits, A=B=6."""
    return KnapsackInstance(name="minimal", weights=(1,), values=((3,),), capacities=(1,))


@pytest.fixture
def minimal_model(minimal_instance: KnapsackInstance) -> QuboModel:
    return compile_qubo(minimal_instance)


@pytest.fixture
def small_instance() -> KnapsackInstance:
    """Three items, two knapsacks, 6 decision + 2 + 3 slack bits = 11 qubits. Optimum 10."""
    return KnapsackInstance(
        name="small",
        weights=(2, 3, 1),
        values=((3, 4, 1), (2, 5, 2)),
        capacities=(3, 4),
    )


@pytest.fixture
def small_model(small_instance: KnapsackInstance) -> QuboModel:
    return compile_qubo(small_instance)


@pytest.fixture
def toy_model() -> QuboModel:
    """Two-variable QUBO without an instance."""
    return QuboModel.from_arrays([1.0, -2.0], {(0, 1): 1.5}, offset=0.5)


@pytest.fixture(scope="session")
def scenarios() -> dict[str, KnapsackInstance]:
    return {name: load_scenario(name) for name in SCENARIO_NAMES}
