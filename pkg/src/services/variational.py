# src/services/variational.py
"""QAOA, warm-started QAOA variants and VQE with a scipy outer loop."""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from src.core.exceptions import ParameterError
from src.core.logging import get_logger
from src.core.schemas import ObjectiveMode, OptimizerConfig, SolverKind
from src.services.metrics import SampleDistribution
from src.services.qubo import QuboModel, solve_relaxation
from src.services.seeds import derive_seed
from src.services.simulator import (
    DiagonalHamiltonian,
    StateVector,
    apply_cx,
    apply_phase,
    apply_ry,
    apply_ws_mixer,
    apply_x_mixer,
    check_warm_start,
    expectation,
    sample,
    uniform_state,
    warm_start_state,
)

logger = get_logger("variational")

QAOA_PARAM_RANGE = (-np.pi, np.pi)
VQE_PARAM_RANGE = (0.0, 2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class AnsatzSpec:
    kind: SolverKind
    layers: int
    num_qubits: int
    c_star: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.kind.is_variational:
            raise ParameterError(f"{self.kind.value} is not a variational ansatz", field="kind")
        if self.layers < 1:
            raise ParameterError("layers must be >= 1", field="layers")
        if self.kind.is_warm_started:
            if self.c_star is None:
                raise ParameterError(f"{self.kind.value} needs a warm-start vector", field="c_star")
            c_star = check_warm_start(self.c_star)
            if c_star.shape[0] != self.num_qubits:
                raise ParameterError("warm-start vector length differs from the qubit count", field="c_star")
            object.__setattr__(self, "c_star", c_star)

    @property
    def num_params(self) -> int:
        if self.kind is SolverKind.VQE:
            return self.num_qubits * (self.layers + 1)
        return 2 * self.layers

    @property
    def param_range(self) -> tuple[float, float]:
        return VQE_PARAM_RANGE if self.kind is SolverKind.VQE else QAOA_PARAM_RANGE


def make_ansatz(model: QuboModel, kind: SolverKind, layers: int, relaxation_seed: int = 0) -> AnsatzSpec:
    """Ansatz for `model`; warm-started kinds get c* from the QUBO relaxation."""
    c_star = solve_relaxation(model, seed=relaxation_seed) if kind.is_warm_started else None
    return AnsatzSpec(kind=kind, layers=layers, num_qubits=model.num_vars, c_star=c_star)


@dataclass
class OptimizationTrace:
    iterations: int
    evaluations: int
    best_params: np.ndarray
    best_expectation: float
    history: list[tuple[np.ndarray, float]] = field(default_factory=list)
    converged: bool = True
    message: str = ""
    mean_eval_seconds: float = 0.0

    def values(self) -> np.ndarray:
        return np.array([value for _, value in self.history])

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.values())


# --- State builders ---


def build_qaoa_state(
    model: QuboModel,
    spec: AnsatzSpec,
    gammas: np.ndarray,
    betas: np.ndarray,
    hamiltonian: DiagonalHamiltonian | None = None,
) -> StateVector:
    """Layer l applies the phase separator then the mixer; layer 1 acts first."""
    if spec.kind is SolverKind.VQE:
        raise ParameterError("VQE states are built with build_vqe_state", field="kind")
    if len(gammas) != spec.layers or len(betas) != spec.layers:
        raise ParameterError(f"expected {spec.layers} gammas and betas", field="params")
    hamiltonian = hamiltonian or DiagonalHamiltonian.from_model(model)

    if spec.kind is SolverKind.QAOA:
        state = uniform_state(spec.num_qubits)
    else:
        state = warm_start_state(spec.c_star)

    for gamma, beta in zip(gammas, betas, strict=True):
        state = apply_phase(state, hamiltonian, gamma)
        if spec.kind is SolverKind.WS_QAOA:
            state = apply_ws_mixer(state, spec.c_star, beta)
        else:
            state = apply_x_mixer(state, beta)
    return state


def build_vqe_state(spec: AnsatzSpec, thetas: np.ndarray) -> StateVector:
    """[RY on every qubit, CX chain 0->1->...->n-1] x p, then a final RY layer."""
    n = spec.num_qubits
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.shape != (spec.num_params,):
        raise ParameterError(f"expected {spec.num_params} rotation angles, got {thetas.size}", field="thetas")

    state = StateVector.basis(n, 0)
    for layer in range(spec.layers + 1):
        for q in range(n):
            state = apply_ry(state, q, thetas[layer * n + q])
        if layer < spec.layers:
            for q in range(n - 1):
                state = apply_cx(state, q, q + 1)
    return state


def build_state(
    model: QuboModel,
    spec: AnsatzSpec,
    params: np.ndarray,
    hamiltonian: DiagonalHamiltonian | None = None,
) -> StateVector:
    """QAOA-family params are (gammas, betas) concatenated."""
    if spec.kind is SolverKind.VQE:
        return build_vqe_state(spec, params)
    p = spec.layers
    return build_qaoa_state(model, spec, params[:p], params[p:], hamiltonian)


# --- Outer loop ---


def _shot_estimate(state: StateVector, table: np.ndarray, shots: int, rng: np.random.Generator) -> float:
    probs = state.probabilities()
    counts = rng.multinomial(shots, probs / probs.sum())
    return float(counts @ table / shots)


def optimize(
    model: QuboModel,
    spec: AnsatzSpec,
    config: OptimizerConfig,
    seed: int,
    hamiltonian: DiagonalHamiltonian | None = None,
) -> OptimizationTrace:
    """Minimize the ansatz energy from a random start. Divergence flags the trace, it never raises."""
    hamiltonian = hamiltonian or DiagonalHamiltonian.from_model(model)
    rng = np.random.default_rng(seed)
    lo, hi = spec.param_range
    x0 = rng.uniform(lo, hi, size=spec.num_params)

    shot_rng = np.random.default_rng(derive_seed(seed, 1))
    table = hamiltonian.dense() if config.objective is ObjectiveMode.SHOTS else None

    history: list[tuple[np.ndarray, float]] = []
    elapsed = 0.0

    def objective(params: np.ndarray) -> float:
        nonlocal elapsed
        start = time.perf_counter()
        state = build_state(model, spec, params, hamiltonian)
        if table is not None:
            value = _shot_estimate(state, table, config.shots_per_eval, shot_rng)
        else:
            value = expectation(state, hamiltonian)
        elapsed += time.perf_counter() - start
        history.append((np.array(params, copy=True), value))
        return value

    result = minimize(
        objective,
        x0,
        method=config.method.value,
        tol=config.tolerance,
        options={"maxiter": config.max_iter},
    )

    values = np.array([value for _, value in history])
    best = int(np.argmin(values))
    iterations = int(result.nit) if "nit" in result else int(result.nfev)
    trace = OptimizationTrace(
        iterations=iterations,
        evaluations=len(history),
        best_params=history[best][0],
        best_expectation=float(values[best]),
        history=history,
        converged=bool(result.success),
        message=str(result.message),
        mean_eval_seconds=elapsed / len(history),
    )

    log_extra = {
        "solver": spec.kind.value,
        "layers": spec.layers,
        "seed": seed,
        "n_iter": trace.iterations,
        "energy": trace.best_expectation,
    }
    if trace.converged:
        logger.debug("Optimizer finished", extra=log_extra)
    else:
        logger.warning(f"Optimizer did not converge: {trace.message}", extra=log_extra)
    return trace


def run_variational(
    model: QuboModel,
    spec: AnsatzSpec,
    config: OptimizerConfig,
    n_samp: int,
    seed: int,
    hamiltonian: DiagonalHamiltonian | None = None,
) -> tuple[SampleDistribution, OptimizationTrace]:
    """Optimize, rebuild the state at the best parameters and sample it."""
    hamiltonian = hamiltonian or DiagonalHamiltonian.from_model(model)
    trace = optimize(model, spec, config, seed, hamiltonian)
    state = build_state(model, spec, trace.best_params, hamiltonian)
    distribution = sample(state, n_samp, derive_seed(seed, 2))
    return distribution, trace
