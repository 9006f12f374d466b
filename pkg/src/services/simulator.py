# src/services/simulator.py
"""
Dense statevector simulator for the circuits of the benchmark.

Conventions:
    RY(theta) = exp(-i theta Y / 2), RZ(phi) = exp(-i phi Z / 2),
    X mixer = exp(-i beta X) (no factor 1/2).
    Qubit 0 is the lowest-order bit of the basis index and the leftmost
    character of a rendered bitstring.
"""

from collections.abc import Iterator
from dataclasses import dataclass
from functools import reduce

import numpy as np

from src.core.config import settings
from src.core.exceptions import BudgetError, ParameterError
from src.services.instance import index_to_bits
from src.services.metrics import SampleDistribution
from src.services.qubo import ENUMERATION_CHUNK, QuboModel, basis_energies

SQRT_HALF = np.sqrt(0.5)


# --- Gate matrices ---


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(phi: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]], dtype=np.complex128)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def x_mixer_matrix(beta: float) -> np.ndarray:
    """exp(-i beta X)"""
    return rx_matrix(2.0 * beta)


def warm_start_angle(c: float) -> float:
    return float(2.0 * np.arcsin(np.sqrt(c)))


def ws_mixer_matrix(c: float, beta: float) -> np.ndarray:
    """RY(theta) RZ(-2 beta) RY(-theta) with theta = 2 arcsin(sqrt(c))."""
    theta = warm_start_angle(c)
    return ry_matrix(theta) @ rz_matrix(-2.0 * beta) @ ry_matrix(-theta)


SX_MATRIX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=np.complex128)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def check_warm_start(c_star: np.ndarray) -> np.ndarray:
    c_star = np.asarray(c_star, dtype=np.float64)
    if c_star.ndim != 1 or np.any(c_star <= 0.0) or np.any(c_star >= 1.0):
        raise ParameterError("warm-start values must lie strictly inside (0, 1); clamp them first", field="c_star")
    return c_star


def check_num_qubits(n: int) -> None:
    if n < 1:
        raise ParameterError("a state needs at least one qubit", field="num_qubits")
    if n > settings.MAX_SIMULATED_QUBITS:
        raise BudgetError("simulated qubits", n, settings.MAX_SIMULATED_QUBITS)


# --- States and Hamiltonians ---


@dataclass
class StateVector:
    amplitudes: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))

    def marginal(self, qubit: int) -> float:
        """Probability of measuring `qubit` in |1>."""
        n = self.num_qubits
        probs = self.probabilities().reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
        return float(probs[:, 1, :].sum())

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        check_num_qubits(num_qubits)
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)


class DiagonalHamiltonian:
    """QUBO energies per basis state, tabulated up to a size limit and computed in chunks above it."""

    def __init__(self, num_qubits: int, table: np.ndarray | None = None, model: QuboModel | None = None):
        if table is None and model is None:
            raise ParameterError("a Hamiltonian needs an energy table or a model")
        self.num_qubits = num_qubits
        self.table = table
        self.model = model

    @classmethod
    def from_model(cls, model: QuboModel, table_max_qubits: int | None = None) -> "DiagonalHamiltonian":
        limit = settings.ENERGY_TABLE_MAX_QUBITS if table_max_qubits is None else table_max_qubits
        n = model.num_vars
        check_num_qubits(n)
        if n <= limit:
            return cls(n, table=basis_energies(model))
        return cls(n, model=model)

    @classmethod
    def from_energies(cls, energies: np.ndarray) -> "DiagonalHamiltonian":
        energies = np.asarray(energies, dtype=np.float64)
        n = int(energies.shape[0]).bit_length() - 1
        if energies.shape[0] != 1 << n:
            raise ParameterError("energy table length must be a power of two", field="energies")
        return cls(n, table=energies)

    def chunks(self) -> Iterator[tuple[int, np.ndarray]]:
        if self.table is not None:
            yield 0, self.table
            return
        total = 1 << self.num_qubits
        for lo in range(0, total, ENUMERATION_CHUNK):
            hi = min(lo + ENUMERATION_CHUNK, total)
            yield lo, basis_energies(self.model, lo, hi)

    def dense(self) -> np.ndarray:
        if self.table is not None:
            return self.table
        return np.concatenate([values for _, values in self.chunks()])


def _check_dims(state: StateVector, hamiltonian: DiagonalHamiltonian) -> None:
    if state.num_qubits != hamiltonian.num_qubits:
        raise ParameterError(
            f"state has {state.num_qubits} qubits, Hamiltonian has {hamiltonian.num_qubits}", field="hamiltonian"
        )


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise ParameterError(f"qubit {qubit} out of range for {state.num_qubits} qubits", field="qubit")


def uniform_state(n: int) -> StateVector:
    check_num_qubits(n)
    return StateVector(np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


def warm_start_state(c_star: np.ndarray) -> StateVector:
    """Product state with P(qubit l = 1) = c*_l."""
    c_star = check_warm_start(c_star)
    check_num_qubits(c_star.shape[0])
    factors = [np.array([np.sqrt(1.0 - c), np.sqrt(c)], dtype=np.complex128) for c in c_star]
    # kron(v_{n-1}, ..., v_0) puts qubit 0 on the lowest-order bit
    return StateVector(reduce(np.kron, reversed(factors)))


# --- Gates ---


def apply_gate(state: StateVector, matrix: np.ndarray, qubit: int) -> StateVector:
    _check_qubit(state, qubit)
    n = state.num_qubits
    psi = state.amplitudes.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    return StateVector(np.einsum("ab,ibj->iaj", matrix, psi).reshape(-1))


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    return apply_gate(state, ry_matrix(theta), qubit)


def apply_rz(state: StateVector, qubit: int, phi: float) -> StateVector:
    return apply_gate(state, rz_matrix(phi), qubit)


def apply_cx(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ParameterError("control and target must differ", field="target")
    idx = np.arange(1 << state.num_qubits, dtype=np.int64)
    flip = ((idx >> control) & 1) == 1
    amps = state.amplitudes[np.where(flip, idx ^ (1 << target), idx)]
    return StateVector(amps)


def apply_phase(state: StateVector, hamiltonian: DiagonalHamiltonian, gamma: float) -> StateVector:
    """amplitude_k <- exp(-i gamma E_k) amplitude_k"""
    _check_dims(state, hamiltonian)
    amps = state.amplitudes.copy()
    for lo, values in hamiltonian.chunks():
        amps[lo : lo + values.shape[0]] *= np.exp(-1j * gamma * values)
    return StateVector(amps)


def apply_x_mixer(state: StateVector, beta: float) -> StateVector:
    matrix = x_mixer_matrix(beta)
    for q in range(state.num_qubits):
        state = apply_gate(state, matrix, q)
    return state


def apply_ws_mixer(state: StateVector, c_star: np.ndarray, beta: float) -> StateVector:
    c_star = check_warm_start(c_star)
    if c_star.shape[0] != state.num_qubits:
        raise ParameterError("warm-start vector length differs from the qubit count", field="c_star")
    for q, c in enumerate(c_star):
        state = apply_gate(state, ws_mixer_matrix(c, beta), q)
    return state


# --- Readout ---


def expectation(state: StateVector, hamiltonian: DiagonalHamiltonian) -> float:
    _check_dims(state, hamiltonian)
    probs = state.probabilities()
    return float(sum(probs[lo : lo + values.shape[0]] @ values for lo, values in hamiltonian.chunks()))


def probabilities_by_bitstring(state: StateVector, cutoff: float = 0.0) -> dict[str, float]:
    probs = state.probabilities()
    n = state.num_qubits
    return {index_to_bits(int(k), n): float(probs[k]) for k in np.flatnonzero(probs > cutoff)}


def sample(state: StateVector, n_samp: int, seed: int) -> SampleDistribution:
    """Multinomial shot draw from |amplitude|^2."""
    if n_samp < 1:
        raise ParameterError("n_samp must be >= 1", field="n_samp")
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    counts = rng.multinomial(n_samp, probs / probs.sum())
    n = state.num_qubits
    return SampleDistribution({index_to_bits(int(k), n): int(counts[k]) for k in np.flatnonzero(counts)})
