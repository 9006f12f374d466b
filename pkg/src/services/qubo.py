# src/services/qubo.py
"""Penalty QUBO for multi-knapsack instances, energies and the warm-start relaxation."""

from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from src.core.config import settings
from src.core.exceptions import ParameterError
from src.core.logging import get_logger
from src.services.instance import Bits, KnapsackInstance, QubitLayout, as_bits, layout

logger = get_logger("qubo")

ENUMERATION_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class QuboModel:
    """
    E(x) = offset + sum_l linear[l] x_l + sum_{p<q} quadratic[p, q] x_p x_q.

    `squares` keeps the x_l**2 coefficients that were folded into `linear`,
    so continuous points can be evaluated on the unfolded form.
    """

    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0
    squares: np.ndarray | None = None
    instance: KnapsackInstance | None = None
    layout: QubitLayout | None = None
    penalty_a: float | None = None
    penalty_b: float | None = None
    objective_c: float | None = None
    name: str = field(default="qubo")

    @property
    def num_vars(self) -> int:
        return int(self.linear.shape[0])

    @cached_property
    def upper(self) -> np.ndarray:
        """Dense strictly upper-triangular coupling matrix."""
        u = np.zeros((self.num_vars, self.num_vars))
        for (p, q), coeff in self.quadratic.items():
            u[p, q] = coeff
        return u

    @cached_property
    def coupling(self) -> np.ndarray:
        """Symmetric couplings with zero diagonal."""
        return self.upper + self.upper.T

    @cached_property
    def square_terms(self) -> np.ndarray:
        return self.squares if self.squares is not None else np.zeros(self.num_vars)

    def require_instance(self) -> tuple[KnapsackInstance, QubitLayout]:
        if self.instance is None or self.layout is None:
            raise ParameterError("model was not compiled from a knapsack instance", field="model")
        return self.instance, self.layout

    @classmethod
    def from_arrays(
        cls,
        linear: Iterable[float],
        quadratic: Mapping[tuple[int, int], float] | None = None,
        offset: float = 0.0,
        name: str = "qubo",
    ) -> "QuboModel":
        lin = np.asarray(list(linear), dtype=np.float64)
        quad: dict[tuple[int, int], float] = {}
        for (p, q), coeff in (quadratic or {}).items():
            if not 0 <= p < q < lin.shape[0]:
                raise ParameterError(f"quadratic key ({p}, {q}) must satisfy 0 <= p < q < {lin.shape[0]}")
            if coeff != 0.0:
                quad[(int(p), int(q))] = quad.get((int(p), int(q)), 0.0) + float(coeff)
        return cls(linear=lin, quadratic=quad, offset=float(offset), name=name)


@dataclass(frozen=True)
class PenaltyBreakdown:
    single: float
    capacity: float
    objective: float

    def combine(self, a: float, b: float, c: float) -> float:
        return a * self.single + b * self.capacity + c * self.objective


class _QuboBuilder:
    """Accumulates squared linear forms term by term, keeping x**2 coefficients apart."""

    def __init__(self, num_vars: int):
        self.linear = np.zeros(num_vars)
        self.squares = np.zeros(num_vars)
        self.quadratic: dict[tuple[int, int], float] = defaultdict(float)
        self.offset = 0.0

    def add_linear(self, var: int, coeff: float) -> None:
        self.linear[var] += coeff

    def add_squared_form(self, terms: list[tuple[int, float]], constant: float, weight: float) -> None:
        """weight * (sum_k a_k z_k - constant)**2"""
        terms = [(v, a) for v, a in terms if a != 0]
        for v, a in terms:
            self.squares[v] += weight * a * a
            self.linear[v] -= 2.0 * weight * constant * a
        for (p, a), (q, b) in combinations(terms, 2):
            key = (p, q) if p < q else (q, p)
            self.quadratic[key] += 2.0 * weight * a * b
        self.offset += weight * constant * constant

    def build(self, **kwargs) -> QuboModel:
        quadratic = {k: v for k, v in sorted(self.quadratic.items()) if v != 0.0}
        return QuboModel(
            linear=self.linear + self.squares,
            quadratic=quadratic,
            offset=self.offset,
            squares=self.squares.copy(),
            **kwargs,
        )


def default_weights(instance: KnapsackInstance) -> tuple[float, float, float]:
    """A = B = 2 max v, C = 1."""
    a = 2.0 * instance.max_value
    if a <= 0:
        raise ParameterError(
            "all values are zero, so the default penalties A = B = 2*max(v) vanish; pass explicit weights",
            field="weights",
        )
    return a, a, 1.0


def compile_qubo(instance: KnapsackInstance, weights: tuple[float, float, float] | None = None) -> QuboModel:
    """Compile A*H_single + B*H_capacity + C*H_obj into a QUBO."""
    if weights is None:
        a, b, c = default_weights(instance)
    else:
        a, b, c = (float(w) for w in weights)
        if min(a, b, c) <= 0:
            raise ParameterError("penalty weights A, B, C must be positive", field="weights")

    qubits = layout(instance)
    builder = _QuboBuilder(qubits.total_qubits)
    n, m = instance.num_items, instance.num_knapsacks

    # H_single = sum_j [(sum_i x_ij)^2 - sum_i x_ij]
    for j in range(n):
        column = [(qubits.index_of_decision(i, j), 1.0) for i in range(m)]
        builder.add_squared_form(column, 0.0, a)
        for var, _ in column:
            builder.add_linear(var, -a)

    # H_capacity = sum_i (sum_j w_j x_ij + sum_b 2^b y_ib - c_i)^2
    for i in range(m):
        terms = [(qubits.index_of_decision(i, j), float(instance.weights[j])) for j in range(n)]
        terms += [(qubits.index_of_slack(i, bit), float(1 << bit)) for bit in range(qubits.slack_counts[i])]
        builder.add_squared_form(terms, float(instance.capacities[i]), b)

    # H_obj = -sum_ij v_ij x_ij
    for i in range(m):
        for j in range(n):
            builder.add_linear(qubits.index_of_decision(i, j), -c * instance.values[i][j])

    model = builder.build(
        instance=instance,
        layout=qubits,
        penalty_a=a,
        penalty_b=b,
        objective_c=c,
        name=instance.name,
    )
    logger.debug(
        "QUBO compiled",
        extra={"scenario": instance.name, "num_qubits": model.num_vars},
    )
    return model


# --- Evaluation ---


def energy(model: QuboModel, bits: Bits) -> float:
    x = as_bits(bits, model.num_vars).astype(np.float64)
    return float(model.offset + model.linear @ x + x @ model.upper @ x)


def energies(model: QuboModel, matrix: np.ndarray) -> np.ndarray:
    """Energies of the rows of a (K, L) 0/1 matrix."""
    x = np.asarray(matrix, dtype=np.float64)
    return model.offset + x @ model.linear + np.einsum("kl,kl->k", x @ model.upper, x)


def basis_bits(start: int, stop: int, num_vars: int) -> np.ndarray:
    """Rows of bits for basis indices [start, stop); column q is bit q of the index."""
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(num_vars, dtype=np.int64)) & 1).astype(np.uint8)


def basis_energies(model: QuboModel, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = (1 << model.num_vars) if stop is None else stop
    out = np.empty(stop - start)
    for lo in range(start, stop, ENUMERATION_CHUNK):
        hi = min(lo + ENUMERATION_CHUNK, stop)
        out[lo - start : hi - start] = energies(model, basis_bits(lo, hi, model.num_vars))
    return out


def penalty_breakdown(model: QuboModel, bits: Bits) -> PenaltyBreakdown:
    instance, qubits = model.require_instance()
    decisions, slack = qubits.decode(bits)
    per_item = decisions.sum(axis=0)
    loads = decisions @ np.asarray(instance.weights, dtype=np.int64)
    residual = loads + slack - np.asarray(instance.capacities, dtype=np.int64)
    value = int((decisions * np.asarray(instance.values, dtype=np.int64)).sum())
    return PenaltyBreakdown(
        single=float(int((per_item * (per_item - 1)).sum())),
        capacity=float(int((residual * residual).sum())),
        objective=float(-value),
    )


def packing_value(model: QuboModel, bits: Bits) -> int:
    """v_tot: total value of the decoded packing."""
    instance, qubits = model.require_instance()
    decisions, _ = qubits.decode(bits)
    return int((decisions * np.asarray(instance.values, dtype=np.int64)).sum())


# --- Continuous relaxation ---


def relaxed_energy(model: QuboModel, c: np.ndarray) -> float:
    c = np.asarray(c, dtype=np.float64)
    sq = model.square_terms
    return float(model.offset + (model.linear - sq) @ c + sq @ (c * c) + c @ model.upper @ c)


def _relaxed_objective(model: QuboModel):
    sq = model.square_terms
    lin = model.linear - sq
    upper, coupling = model.upper, model.coupling

    def fun(c: np.ndarray) -> tuple[float, np.ndarray]:
        value = model.offset + lin @ c + sq @ (c * c) + c @ upper @ c
        grad = lin + 2.0 * sq * c + coupling @ c
        return float(value), grad

    return fun


def solve_relaxation(
    model: QuboModel,
    restarts: int | None = None,
    seed: int = 0,
    epsilon: float | None = None,
    max_iter: int | None = None,
) -> np.ndarray:
    """
    Minimize the QUBO over [0, 1]^L from `restarts` random starting points.

    The best restart (lowest relaxed energy, lowest restart index on ties) is
    clamped to [epsilon, 1 - epsilon]; epsilon=0 returns the raw optimum.
    """
    restarts = settings.RELAXATION_RESTARTS if restarts is None else restarts
    epsilon = settings.RELAXATION_EPSILON if epsilon is None else epsilon
    max_iter = settings.RELAXATION_MAX_ITER if max_iter is None else max_iter
    if restarts < 1:
        raise ParameterError("restarts must be >= 1", field="restarts")
    if not 0.0 <= epsilon < 0.5:
        raise ParameterError("epsilon must lie in [0, 0.5)", field="epsilon")

    rng = np.random.default_rng(seed)
    fun = _relaxed_objective(model)
    bounds = [(0.0, 1.0)] * model.num_vars

    best_c, best_value = None, np.inf
    for _ in range(restarts):
        x0 = rng.random(model.num_vars)
        result = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds, options={"maxiter": max_iter})
        c = np.clip(result.x, 0.0, 1.0)
        value = relaxed_energy(model, c)
        if value < best_value:
            best_c, best_value = c, value

    logger.debug("Relaxation solved", extra={"num_qubits": model.num_vars, "energy": best_value})
    if epsilon == 0.0:
        return best_c
    return np.clip(best_c, epsilon, 1.0 - epsilon)


# --- Interchange format: `offset v`, `lin p coeff`, `quad p q coeff` ---


def dump_qubo(model: QuboModel, path: str | Path) -> Path:
    path = Path(path)
    lines = [f"offset {model.offset!r}"]
    lines += [f"lin {p} {float(coeff)!r}" for p, coeff in enumerate(model.linear)]
    lines += [f"quad {p} {q} {coeff!r}" for (p, q), coeff in sorted(model.quadratic.items())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_qubo(path: str | Path) -> QuboModel:
    path = Path(path)
    offset, linear, quadratic = 0.0, {}, {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "offset" and len(parts) == 2:
                offset = float(parts[1])
            elif parts[0] == "lin" and len(parts) == 3:
                linear[int(parts[1])] = float(parts[2])
            elif parts[0] == "quad" and len(parts) == 4:
                quadratic[(int(parts[1]), int(parts[2]))] = float(parts[3])
            else:
                raise ValueError(raw)
        except ValueError as e:
            raise ParameterError(f"{path}:{number}: malformed QUBO term '{raw}'", field="qubo") from e

    num_vars = max([*linear, *(q for _, q in quadratic), -1]) + 1
    return QuboModel.from_arrays(
        [linear.get(p, 0.0) for p in range(num_vars)],
        quadratic,
        offset,
        name=path.stem,
    )
