# src/services/exact.py
"""Exact baselines: QUBO enumeration and branch-and-bound for the packing optimum."""

from dataclasses import dataclass

import numpy as np

from src.core.config import settings
from src.core.exceptions import BudgetError
from src.core.logging import get_logger
from src.services.instance import KnapsackInstance, index_to_bits, layout
from src.services.metrics import is_valid
from src.services.qubo import ENUMERATION_CHUNK, QuboModel, basis_bits, energies, packing_value

logger = get_logger("exact")

TIE_ATOL = 1e-9


@dataclass(frozen=True)
class ExactResult:
    best_bitstring: str
    best_energy: float
    optimal_value: int
    enumerated_count: int
    assignment: tuple[int | None, ...] | None = None


def _reversed_key(indices: np.ndarray, num_vars: int) -> np.ndarray:
    """Integer whose order matches the lexicographic order of the rendered bitstrings."""
    key = np.zeros_like(indices)
    for q in range(num_vars):
        key |= ((indices >> q) & 1) << (num_vars - 1 - q)
    return key


def brute_force_qubo(model: QuboModel, max_vars: int | None = None) -> ExactResult:
    """Exhaustive minimum over {0,1}^L, ties to the lexicographically smallest bitstring."""
    max_vars = settings.BRUTE_FORCE_MAX_VARS if max_vars is None else max_vars
    n = model.num_vars
    if n > max_vars:
        raise BudgetError("brute-force variables", n, max_vars)

    total = 1 << n
    best_energy, best_key, best_index = np.inf, None, 0
    for lo in range(0, total, ENUMERATION_CHUNK):
        hi = min(lo + ENUMERATION_CHUNK, total)
        chunk = energies(model, basis_bits(lo, hi, n))
        low = float(chunk.min())
        if low > best_energy + TIE_ATOL:
            continue
        tied = np.flatnonzero(chunk <= low + TIE_ATOL) + lo
        keys = _reversed_key(tied.astype(np.int64), n)
        k = int(np.argmin(keys))
        if low < best_energy - TIE_ATOL:
            best_energy, best_key, best_index = low, int(keys[k]), int(tied[k])
        elif best_key is None or keys[k] < best_key:
            best_key, best_index = int(keys[k]), int(tied[k])

    bitstring = index_to_bits(best_index, n)
    optimal_value = 0
    if model.instance is not None and is_valid(model, bitstring):
        optimal_value = packing_value(model, bitstring)

    logger.debug("Brute force done", extra={"num_qubits": n, "energy": best_energy})
    return ExactResult(
        best_bitstring=bitstring,
        best_energy=best_energy,
        optimal_value=optimal_value,
        enumerated_count=total,
    )


def branch_and_bound(instance: KnapsackInstance, max_vars: int | None = None) -> ExactResult:
    """
    Depth-first search over item assignments (knapsack 0..M-1, then unpacked).

    The bound merges the remaining capacity of all knapsacks and fills it
    fractionally with each remaining item at its best value. Only strict
    improvements replace the incumbent, so the first optimum in search order
    is reported.
    """
    max_vars = settings.BRANCH_AND_BOUND_MAX_VARS if max_vars is None else max_vars
    n, m = instance.num_items, instance.num_knapsacks
    if n * m > max_vars:
        raise BudgetError("branch-and-bound variables", n * m, max_vars)

    weights = instance.weights
    best_values = [max(instance.values[i][j] for i in range(m)) for j in range(n)]

    def bound(j: int, free: int) -> float:
        total, room = 0.0, float(free)
        items = sorted(
            range(j, n),
            key=lambda k: -np.inf if weights[k] == 0 else -best_values[k] / weights[k],
        )
        for k in items:
            if weights[k] <= room:
                total += best_values[k]
                room -= weights[k]
            else:
                total += best_values[k] * room / weights[k]
                break
        return total

    remaining = list(instance.capacities)
    assignment: list[int | None] = [None] * n
    best_value, best_assignment = -1, tuple(assignment)
    nodes = 0

    def search(j: int, value: int) -> None:
        nonlocal best_value, best_assignment, nodes
        nodes += 1
        if j == n:
            if value > best_value:
                best_value, best_assignment = value, tuple(assignment)
            return
        if value + bound(j, sum(remaining)) <= best_value:
            return
        for i in range(m):
            if weights[j] <= remaining[i]:
                remaining[i] -= weights[j]
                assignment[j] = i
                search(j + 1, value + instance.values[i][j])
                assignment[j] = None
                remaining[i] += weights[j]
        search(j + 1, value)

    search(0, 0)

    qubits = layout(instance)
    bitstring = qubits.encode_packing(instance, best_assignment)
    logger.debug("Branch and bound done", extra={"scenario": instance.name, "energy": -best_value})
    return ExactResult(
        best_bitstring=bitstring,
        best_energy=float(-best_value),
        optimal_value=best_value,
        enumerated_count=nodes,
        assignment=best_assignment,
    )
