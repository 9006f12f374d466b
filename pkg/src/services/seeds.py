# src/services/seeds.py
"""Per-run seed derivation shared by the bench grid and annealing batches."""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """splitmix64 finalizer, a bijection on 64-bit integers."""
    z = value & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """
    Seed for the `index`-th stream of a master seed.

    Injective in `index` for index < 2**64: the golden-ratio increment is odd,
    so the pre-image map is a bijection, and so is the finalizer.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return splitmix64((master + index * _GOLDEN) & _MASK)