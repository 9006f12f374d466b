# tests/test_exact.py
"""
Tests for the exact baselines: QUBO enumeration and branch-and-bound.
"""

from itertools import product

import numpy as np
import pytest

from src.core.exceptions import BudgetError
from src.services.exact import branch_and_bound, brute_force_qubo
from src.services.instance import KnapsackInstance, generate_instance, layout
from src.services.metrics import is_valid
from src.services.qubo import QuboModel, compile_qubo, packing_value


def _enumerate_assignments(instance: KnapsackInstance) -> int:
    """Best value over all (M+1)^N item assignments that respect the capacities."""
    choices = [None, *range(instance.num_knapsacks)]
    best = 0
    for assignment in product(choices, repeat=instance.num_items):
        if instance.is_feasible(assignment):
            best = max(best, instance.packing_value(assignment))
    return best


@pytest.mark.unit
class TestBruteForce:
    """Tests for brute_force_qubo."""

    def test_single_variable(self) -> None:
        """Test a positive linear term prefers zero."""
        result = brute_force_qubo(QuboModel.from_arrays([1.0], offset=0.25))
        assert result.best_bitstring == "0"
        assert result.best_energy == pytest.approx(0.25)
        assert result.enumerated_count == 2

    def test_minimal_instance(self, minimal_model: QuboModel) -> None:
        """Test the four-point enumeration: item packed, slack zero."""
        result = brute_force_qubo(minimal_model)
        assert result.best_bitstring == "10"
        assert result.best_energy == pytest.approx(-3.0)
        assert result.optimal_value == 3

    def test_lexicographic_tie_break(self) -> None:
        """Test ties resolve to the lexicographically smallest bitstring."""
        model = QuboModel.from_arrays([-1.0, -1.0], {(0, 1): 1.0})
        assert brute_force_qubo(model).best_bitstring == "01"
        assert brute_force_qubo(QuboModel.from_arrays([0.0, 0.0, 0.0])).best_bitstring == "000"

    def test_small_instance(self, small_model: QuboModel) -> None:
        """Test the 11-qubit optimum decodes to value 10."""
        result = brute_force_qubo(small_model)
        assert result.best_bitstring == "10001110000"
        assert result.optimal_value == 10

    def test_budget(self, small_model: QuboModel) -> None:
        """Test enumeration refuses models above the budget."""
        with pytest.raises(BudgetError):
            brute_force_qubo(small_model, max_vars=10)


@pytest.mark.unit
class TestBranchAndBound:
    """Tests for branch_and_bound."""

    def test_single_item(self) -> None:
        """Test one feasible packing."""
        instance = KnapsackInstance(name="one", weights=(2,), values=((7,),), capacities=(3,))
        result = branch_and_bound(instance)
        assert result.optimal_value == 7
        assert result.assignment == (0,)

    def test_item_too_heavy(self) -> None:
        """Test the empty packing with full slack."""
        instance = KnapsackInstance(name="heavy", weights=(9,), values=((7,),), capacities=(3,))
        result = branch_and_bound(instance)
        assert result.optimal_value == 0
        assert result.best_bitstring == "011"

    def test_small_instance(self, small_instance: KnapsackInstance) -> None:
        """Test the unique optimum and its encoding."""
        result = branch_and_bound(small_instance)
        assert result.optimal_value == 10
        assert result.assignment == (0, 1, 1)
        assert result.best_energy == -10.0
        assert result.best_bitstring == layout(small_instance).encode_packing(small_instance, (0, 1, 1))

    @pytest.mark.parametrize(
        ("name", "v_opt"),
        [("scenario_1", 22), ("scenario_2", 12), ("scenario_3", 13), ("scenario_4", 13)],
    )
    def test_scenarios(self, scenarios: dict[str, KnapsackInstance], name: str, v_opt: int) -> None:
        """Test the optima of the shipped scenarios."""
        assert branch_and_bound(scenarios[name]).optimal_value == v_opt

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_assignment_enumeration(self, seed: int) -> None:
        """Test against an independent enumerator on random N=4, M=2 instances."""
        instance = generate_instance(4, 2, (1, 5), (0, 9), (1, 8), seed=seed)
        assert branch_and_bound(instance).optimal_value == _enumerate_assignments(instance)

    def test_budget(self, small_instance: KnapsackInstance) -> None:
        """Test the decision-variable budget."""
        with pytest.raises(BudgetError):
            branch_and_bound(small_instance, max_vars=4)


@pytest.mark.slow
class TestQuboOracleEquivalence:
    """QUBO minimum against branch-and-bound on random small instances."""

    def test_two_hundred_instances(self) -> None:
        """Test the QUBO minimizer is valid and decodes to v_opt."""
        rng = np.random.default_rng(2024)
        for trial in range(200):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(1, 3))
            instance = generate_instance(n, m, (1, 5), (1, 9), (1, 7), seed=trial)
            model = compile_qubo(instance)
            assert model.num_vars <= 18
            result = brute_force_qubo(model)
            assert is_valid(model, result.best_bitstring)
            assert packing_value(model, result.best_bitstring) == branch_and_bound(instance).optimal_value
