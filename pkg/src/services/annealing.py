# src/services/annealing.py
"""Simulated annealing sampler and the iterative heuristic sub-problem solver."""

import time
from dataclasses import dataclass, field

import numpy as np

from src.core.exceptions import ParameterError
from src.core.logging import get_logger
from src.core.schemas import AnnealConfig, IhsConfig, InnerSolver
from src.services.exact import brute_force_qubo
from src.services.instance import Bits, as_bits, render_bits
from src.services.metrics import SampleDistribution
from src.services.qubo import QuboModel, energy, energies
from src.services.seeds import derive_seed

logger = get_logger("annealing")

READ_BATCH = 1024


def default_beta_range(model: QuboModel) -> tuple[float, float]:
    """0.1 / mean |coeff| to 10 / min nonzero |coeff|."""
    coeffs = np.abs(np.concatenate([model.linear, np.fromiter(model.quadratic.values(), dtype=np.float64)]))
    coeffs = coeffs[coeffs > 0]
    if coeffs.size == 0:
        return 0.1, 1.0
    beta_min, beta_max = 0.1 / float(coeffs.mean()), 10.0 / float(coeffs.min())
    if beta_min >= beta_max:
        beta_min = beta_max / 100.0
    return beta_min, beta_max


def incremental_delta(model: QuboModel, bits: Bits, flip_index: int) -> float:
    """energy(flipped) - energy(bits), from the local field of the flipped variable."""
    if not 0 <= flip_index < model.num_vars:
        raise ParameterError(f"flip index {flip_index} out of range", field="flip_index")
    x = as_bits(bits, model.num_vars).astype(np.float64)
    field_value = model.linear[flip_index] + model.coupling[flip_index] @ x
    return float((1.0 - 2.0 * x[flip_index]) * field_value)


def _anneal_batch(
    linear: np.ndarray,
    coupling: np.ndarray,
    betas: np.ndarray,
    num_reads: int,
    rng: np.random.Generator,
) -> np.ndarray:
    num_vars = linear.shape[0]
    x = rng.integers(0, 2, size=(num_reads, num_vars)).astype(np.float64)
    local = x @ coupling
    neighbours = [np.flatnonzero(coupling[var]) for var in range(num_vars)]
    for beta in betas:
        uniforms = rng.random((num_reads, num_vars))
        for var in range(num_vars):
            delta = (1.0 - 2.0 * x[:, var]) * (linear[var] + local[:, var])
            accept = (delta <= 0.0) | (uniforms[:, var] < np.exp(-beta * np.maximum(delta, 0.0)))
            if not accept.any():
                continue
            rows = np.flatnonzero(accept)
            step = 1.0 - 2.0 * x[rows, var]
            x[rows, var] += step
            nbrs = neighbours[var]
            if nbrs.size:
                local[np.ix_(rows, nbrs)] += step[:, None] * coupling[var, nbrs]
    return x.astype(np.uint8)


def anneal_reads(model: QuboModel, config: AnnealConfig) -> np.ndarray:
    """Final bitstrings of every read as a (num_reads, L) matrix."""
    beta_min, beta_max = default_beta_range(model)
    beta_min = config.beta_min if config.beta_min is not None else beta_min
    beta_max = config.beta_max if config.beta_max is not None else beta_max
    if beta_min >= beta_max:
        beta_min = beta_max / 100.0
    betas = np.geomspace(beta_min, beta_max, config.sweeps_per_read)

    batches = []
    for batch, start in enumerate(range(0, config.num_reads, READ_BATCH)):
        size = min(READ_BATCH, config.num_reads - start)
        rng = np.random.default_rng(derive_seed(config.seed, batch))
        batches.append(_anneal_batch(model.linear, model.coupling, betas, size, rng))
    return np.concatenate(batches)


def simulated_annealing(model: QuboModel, config: AnnealConfig) -> SampleDistribution:
    """Single-flip Metropolis anneals; each read contributes its final bitstring."""
    reads = anneal_reads(model, config)
    counts: dict[str, int] = {}
    for row in reads:
        key = render_bits(row)
        counts[key] = counts.get(key, 0) + 1
    return SampleDistribution(counts)


# --- Iterative heuristic solver ---


@dataclass
class IhsResult:
    best_bitstring: str
    best_energy: float
    initial_energy: float
    iterations: int
    energy_trace: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0


def sub_qubo(model: QuboModel, bits: np.ndarray, free: np.ndarray) -> QuboModel:
    """QUBO over the `free` variables with all others clamped to `bits`."""
    mask = np.zeros(model.num_vars, dtype=bool)
    mask[free] = True
    clamped = np.flatnonzero(~mask)
    x = bits.astype(np.float64)

    linear = model.linear[free] + model.coupling[np.ix_(free, clamped)] @ x[clamped]
    upper = model.upper[np.ix_(free, free)]
    sym = upper + upper.T
    quadratic = {
        (p, q): float(sym[p, q]) for p in range(len(free)) for q in range(p + 1, len(free)) if sym[p, q] != 0.0
    }
    xc = x[clamped]
    offset = (
        model.offset
        + model.linear[clamped] @ xc
        + xc @ model.upper[np.ix_(clamped, clamped)] @ xc
    )
    return QuboModel.from_arrays(linear, quadratic, float(offset))


def _solve_sub(sub: QuboModel, config: IhsConfig, seed: int) -> np.ndarray:
    if config.inner_solver is InnerSolver.BRUTE_FORCE:
        return as_bits(brute_force_qubo(sub).best_bitstring, sub.num_vars)
    inner = AnnealConfig(num_reads=config.inner_reads, sweeps_per_read=config.inner_sweeps, seed=seed)
    reads = anneal_reads(sub, inner)
    return reads[int(np.argmin(energies(sub, reads)))]


def ihs(model: QuboModel, config: IhsConfig, seed: int | None = None) -> IhsResult:
    """
    Fix all but k random variables, minimize the induced sub-QUBO, splice the
    result back and keep it only if the full energy strictly drops. Stops
    after max_iterations, or earlier after stall_limit iterations without
    improvement when stall_limit is set.
    """
    seed = config.seed if seed is None else seed
    k = config.subproblem_size
    if not 1 <= k <= model.num_vars:
        raise ParameterError(f"subproblem size {k} must lie in [1, {model.num_vars}]", field="subproblem_size")

    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=model.num_vars).astype(np.uint8)
    current = energy(model, x)
    initial = current
    trace = [current]
    stall = 0
    iterations = 0

    for iteration in range(config.max_iterations):
        iterations = iteration + 1
        free = np.sort(rng.choice(model.num_vars, size=k, replace=False))
        candidate = x.copy()
        candidate[free] = _solve_sub(sub_qubo(model, x, free), config, derive_seed(seed, iteration))
        value = energy(model, candidate)
        if value < current:
            x, current, stall = candidate, value, 0
            logger.debug("IHS improved", extra={"n_iter": iterations, "energy": current})
        else:
            stall += 1
        trace.append(current)
        if config.stall_limit is not None and stall >= config.stall_limit:
            break

    return IhsResult(
        best_bitstring=render_bits(x),
        best_energy=current,
        initial_energy=initial,
        iterations=iterations,
        energy_trace=trace,
        wall_seconds=time.perf_counter() - started,
    )
