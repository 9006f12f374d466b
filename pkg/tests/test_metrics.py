# tests/test_metrics.py
"""
Tests for validity, closeness to optimum, overlap and aggregation.
"""

from itertools import product

import numpy as np
import pytest

from src.core.exceptions import ParameterError
from src.services.instance import KnapsackInstance, layout
from src.services.metrics import (
    RunQuality,
    SampleDistribution,
    aggregate,
    closeness,
    is_valid,
    lowest_energy_bitstring,
    mean_std,
    overlap_90,
    score_run,
)
from src.services.qubo import QuboModel

OPTIMUM = "10001110000"
EMPTY_INVALID = "0" * 11


def _packing(instance: KnapsackInstance, assignment: tuple[int | None, ...]) -> str:
    return layout(instance).encode_packing(instance, assignment)


def _quality(c_opt: float | None, o90: float) -> RunQuality:
    return RunQuality(best_bitstring="", valid=c_opt is not None, v_tot=None, c_opt=c_opt, o90=o90)


@pytest.mark.unit
class TestSampleDistribution:
    """Tests for the count container."""

    def test_probabilities(self) -> None:
        """Test probability and amplitude from counts."""
        distribution = SampleDistribution({"01": 3, "10": 1})
        assert distribution.total_shots == 4
        assert distribution.probability("01") == 0.75
        assert distribution.probability("11") == 0.0
        assert distribution.amplitude("10") == pytest.approx(0.5)

    def test_rejects_non_positive_counts(self) -> None:
        """Test zero counts are not stored."""
        with pytest.raises(ParameterError):
            SampleDistribution({"0": 0})


@pytest.mark.unit
class TestValidity:
    """Tests for is_valid and x_min selection."""

    def test_optimum_valid(self, small_model: QuboModel) -> None:
        """Test the encoded optimum."""
        assert is_valid(small_model, OPTIMUM)

    def test_wrong_slack_invalid(self, small_model: QuboModel) -> None:
        """Test empty packing with zero slack violates the capacity equality."""
        assert not is_valid(small_model, EMPTY_INVALID)

    def test_lowest_energy_tie_break(self) -> None:
        """Test equal energies resolve lexicographically."""
        model = QuboModel.from_arrays([0.0, 0.0])
        assert lowest_energy_bitstring(model, ["11", "01", "10"]) == "01"

    def test_empty_distribution(self, toy_model: QuboModel) -> None:
        """Test x_min of nothing."""
        with pytest.raises(ParameterError):
            lowest_energy_bitstring(toy_model, [])


@pytest.mark.unit
class TestCloseness:
    """Tests for closeness to optimum."""

    def test_optimum_sampled(self, small_model: QuboModel) -> None:
        """Test 100% when x_min is the optimum."""
        distribution = SampleDistribution({OPTIMUM: 5, EMPTY_INVALID: 95})
        assert closeness(distribution, small_model, 10) == pytest.approx(100.0)

    def test_suboptimal_packing(self, small_instance: KnapsackInstance, small_model: QuboModel) -> None:
        """Test value 8 of 10 gives 80%."""
        distribution = SampleDistribution({_packing(small_instance, (0, 1, None)): 10})
        assert closeness(distribution, small_model, 10) == pytest.approx(80.0)

    def test_invalid_minimum_excluded(self, small_model: QuboModel) -> None:
        """Test an invalid x_min has no closeness."""
        assert closeness(SampleDistribution({EMPTY_INVALID: 1}), small_model, 10) is None

    @pytest.mark.parametrize("v_opt", [0, -3])
    def test_non_positive_v_opt(self, small_model: QuboModel, v_opt: int) -> None:
        """Test the ratio needs v_opt > 0."""
        with pytest.raises(ParameterError):
            closeness(SampleDistribution({OPTIMUM: 1}), small_model, v_opt)

    def test_mean_of_runs(self) -> None:
        """Test closeness 100 and 90 average to 95."""
        report = aggregate([_quality(100.0, 1.0), _quality(90.0, 0.0)])
        assert report.c_opt_mean == pytest.approx(95.0)


@pytest.mark.unit
class TestOverlap:
    """Tests for the near-optimal overlap."""

    def test_all_mass_on_optimum(self, small_model: QuboModel) -> None:
        """Test overlap 1."""
        assert overlap_90(SampleDistribution({OPTIMUM: 100}), small_model, 10) == pytest.approx(1.0)

    def test_half_mass(self, small_instance: KnapsackInstance, small_model: QuboModel) -> None:
        """Test half the shots on the optimum, half below threshold."""
        distribution = SampleDistribution({OPTIMUM: 50, _packing(small_instance, (0, 1, None)): 50})
        assert overlap_90(distribution, small_model, 10) == pytest.approx(np.sqrt(0.5))

    def test_no_valid_strings(self, small_model: QuboModel) -> None:
        """Test overlap 0 when every sample is invalid."""
        assert overlap_90(SampleDistribution({EMPTY_INVALID: 10}), small_model, 10) == 0.0

    def test_lower_threshold_counts_more(self, small_instance: KnapsackInstance, small_model: QuboModel) -> None:
        """Test c_lim = 0.8 admits the value-8 packing."""
        distribution = SampleDistribution({OPTIMUM: 50, _packing(small_instance, (0, 1, None)): 50})
        assert overlap_90(distribution, small_model, 10, c_lim=0.8) == pytest.approx(2 * np.sqrt(0.5))

    def test_monotone_in_c_lim(
        self, small_instance: KnapsackInstance, small_model: QuboModel, rng: np.random.Generator
    ) -> None:
        """Test lowering c_lim never lowers the overlap on random distributions."""
        choices = [None, 0, 1]
        packings = [
            _packing(small_instance, assignment)
            for assignment in product(choices, repeat=3)
            if small_instance.is_feasible(assignment)
        ]
        support = [*packings, EMPTY_INVALID]
        for _ in range(1000):
            picked = rng.choice(len(support), size=int(rng.integers(1, 5)), replace=False)
            distribution = SampleDistribution({support[i]: int(rng.integers(1, 100)) for i in picked})
            low, high = sorted(rng.uniform(0, 1, size=2))
            assert overlap_90(distribution, small_model, 10, c_lim=low) >= overlap_90(
                distribution, small_model, 10, c_lim=high
            )


@pytest.mark.unit
class TestAggregate:
    """Tests for per-cell aggregation."""

    def test_identical_runs(self) -> None:
        """Test zero spread across identical runs."""
        report = aggregate([_quality(100.0, 0.5)] * 4)
        assert report.o90_std == 0.0
        assert report.c_opt_std == 0.0
        assert report.n_excluded == 0

    def test_population_std(self) -> None:
        """Test (0.1, 0.3) gives mean 0.2 and std 0.1."""
        report = aggregate([_quality(None, 0.1), _quality(None, 0.3)])
        assert report.o90_mean == pytest.approx(0.2)
        assert report.o90_std == pytest.approx(0.1)
        assert report.c_opt_mean is None
        assert report.n_excluded == 2

    def test_empty(self) -> None:
        """Test aggregate needs runs."""
        with pytest.raises(ParameterError):
            aggregate([])

    def test_mean_std_empty(self) -> None:
        """Test the empty sequence."""
        assert mean_std([]) == (None, None)

    def test_score_run(self, small_model: QuboModel) -> None:
        """Test one scored run."""
        quality = score_run(SampleDistribution({OPTIMUM: 3, EMPTY_INVALID: 1}), small_model, 10)
        assert quality.best_bitstring == OPTIMUM
        assert quality.valid
        assert quality.v_tot == 10
        assert quality.c_opt == pytest.approx(100.0)
        assert quality.o90 == pytest.approx(np.sqrt(0.75))
