"""Splitmix64 seed derivation for reproducible, extensible cohorts."""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Per-item seed: splitmix64(seed XOR index)."""
    return splitmix64((int(seed) ^ int(index)) & MASK64)


DERIVATION = "splitmix64(seed ^ session_index)"
