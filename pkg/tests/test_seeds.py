# tests/test_seeds.py
"""
Tests for per-run seed derivation.
"""

import numpy as np
import pytest

from src.services.seeds import derive_seed, splitmix64


@pytest.mark.unit
class TestDeriveSeed:
    """Tests for derive_seed."""

    def test_deterministic(self) -> None:
        """Test that the same inputs give the same seed."""
        assert derive_seed(7, 12) == derive_seed(7, 12)

    def test_range(self) -> None:
        """Test that seeds are unsigned 64-bit integers."""
        for index in range(100):
            assert 0 <= derive_seed(123, index) < 1 << 64

    def test_master_seed_matters(self) -> None:
        """Test that different master seeds give different streams."""
        assert derive_seed(1, 0) != derive_seed(2, 0)

    def test_negative_index(self) -> None:
        """Test that negative indices are rejected."""
        with pytest.raises(ValueError):
            derive_seed(7, -1)

    @pytest.mark.slow
    @pytest.mark.parametrize("master", [0, 7, 2**63 + 5])
    def test_distinct_over_many_cells(self, master: int) -> None:
        """Test pairwise distinct seeds across 10^6 grid indices."""
        seeds = np.fromiter((derive_seed(master, i) for i in range(1_000_000)), dtype=np.uint64)
        assert np.unique(seeds).size == seeds.size


@pytest.mark.unit
class TestSplitmix:
    """Tests for the splitmix64 finalizer."""

    def test_known_value(self) -> None:
        """Test the finalizer on zero, a fixed point of the mixing steps."""
        assert splitmix64(0) == 0

    def test_masks_input(self) -> None:
        """Test that inputs are reduced modulo 2^64."""
        assert splitmix64(1 << 64) == splitmix64(0)
        assert splitmix64((1 << 64) + 5) == splitmix64(5)
