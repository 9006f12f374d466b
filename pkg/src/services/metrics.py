# src/services/metrics.py
"""Solution quality: validity, closeness to optimum and near-optimal overlap."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.core.exceptions import ParameterError
from src.core.logging import get_logger
from src.services.instance import Bits
from src.services.qubo import QuboModel, energy, packing_value, penalty_breakdown

logger = get_logger("metrics")

DEFAULT_C_LIM = 0.90
THRESHOLD_ATOL = 1e-9


@dataclass(frozen=True)
class SampleDistribution:
    """Measured bitstring counts of one run. Amplitude a(x) = sqrt(count / total)."""

    counts: dict[str, int]

    def __post_init__(self) -> None:
        if any(c <= 0 for c in self.counts.values()):
            raise ParameterError("counts must be positive", field="counts")

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def probability(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.total_shots

    def probabilities(self) -> dict[str, float]:
        total = self.total_shots
        return {b: c / total for b, c in self.counts.items()}

    def amplitude(self, bitstring: str) -> float:
        return float(np.sqrt(self.probability(bitstring)))


def is_valid(model: QuboModel, bits: Bits) -> bool:
    """H_single == 0 and H_capacity == 0 on the decoded assignment."""
    breakdown = penalty_breakdown(model, bits)
    return breakdown.single == 0 and breakdown.capacity == 0


def lowest_energy_bitstring(model: QuboModel, bitstrings: Sequence[str] | Mapping[str, object]) -> str:
    """x_min; energy ties go to the lexicographically smallest bitstring."""
    candidates = sorted(bitstrings)
    if not candidates:
        raise ParameterError("distribution is empty", field="distribution")
    scored = [(energy(model, b), b) for b in candidates]
    return min(scored)[1]


def _check_v_opt(v_opt: int) -> None:
    if v_opt <= 0:
        raise ParameterError("v_opt must be positive to form a ratio", field="v_opt")


def closeness(distribution: SampleDistribution, model: QuboModel, v_opt: int) -> float | None:
    """100 * v_tot(x_min) / v_opt, or None when x_min is invalid (run excluded)."""
    _check_v_opt(v_opt)
    x_min = lowest_energy_bitstring(model, distribution.counts)
    if not is_valid(model, x_min):
        return None
    return 100.0 * packing_value(model, x_min) / v_opt


def overlap_from_probabilities(
    probabilities: Mapping[str, float],
    model: QuboModel,
    v_opt: int,
    c_lim: float = DEFAULT_C_LIM,
) -> float:
    """Sum of sqrt(p(x)) over valid x with v_tot(x) >= c_lim * v_opt."""
    _check_v_opt(v_opt)
    total = 0.0
    for bitstring, p in probabilities.items():
        if p <= 0 or not is_valid(model, bitstring):
            continue
        if packing_value(model, bitstring) >= c_lim * v_opt - THRESHOLD_ATOL:
            total += float(np.sqrt(p))
    return total


def overlap_90(
    distribution: SampleDistribution,
    model: QuboModel,
    v_opt: int,
    c_lim: float = DEFAULT_C_LIM,
) -> float:
    return overlap_from_probabilities(distribution.probabilities(), model, v_opt, c_lim)


@dataclass(frozen=True)
class RunQuality:
    """Per-run quality values."""

    best_bitstring: str
    valid: bool
    v_tot: int | None
    c_opt: float | None
    o90: float


@dataclass(frozen=True)
class QualityReport:
    n_run: int
    n_valid: int
    c_lim: float
    c_opt_mean: float | None
    c_opt_std: float | None
    o90_mean: float
    o90_std: float
    runs: list[RunQuality] = field(default_factory=list)

    @property
    def n_excluded(self) -> int:
        return self.n_run - self.n_valid


def score_run(
    distribution: SampleDistribution,
    model: QuboModel,
    v_opt: int,
    c_lim: float = DEFAULT_C_LIM,
) -> RunQuality:
    _check_v_opt(v_opt)
    x_min = lowest_energy_bitstring(model, distribution.counts)
    valid = is_valid(model, x_min)
    v_tot = packing_value(model, x_min) if valid else None
    return RunQuality(
        best_bitstring=x_min,
        valid=valid,
        v_tot=v_tot,
        c_opt=100.0 * v_tot / v_opt if valid else None,
        o90=overlap_90(distribution, model, v_opt, c_lim),
    )


def mean_std(values: Sequence[float]) -> tuple[float | None, float | None]:
    """Mean and population standard deviation, None for an empty sequence."""
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=0))


def aggregate(runs: Sequence[RunQuality], c_lim: float = DEFAULT_C_LIM) -> QualityReport:
    """Mean and population std across runs; runs with an invalid x_min leave the C_opt mean."""
    if not runs:
        raise ParameterError("aggregate needs at least one run", field="runs")
    closeness_values = [r.c_opt for r in runs if r.c_opt is not None]
    c_mean, c_std = mean_std(closeness_values)
    o_mean, o_std = mean_std([r.o90 for r in runs])
    if len(closeness_values) < len(runs):
        logger.warning(f"{len(runs) - len(closeness_values)} of {len(runs)} runs excluded from closeness")
    return QualityReport(
        n_run=len(runs),
        n_valid=len(closeness_values),
        c_lim=c_lim,
        c_opt_mean=c_mean,
        c_opt_std=c_std,
        o90_mean=o_mean,
        o90_std=o_std,
        runs=list(runs),
    )
