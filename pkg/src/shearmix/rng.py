"""Counter-based random number derivation for schedules.

Every shear duration is a pure function of (seed, sample index j, duration
index i), so draws do not depend on evaluation order, chunk size, or thread
count.  The mix is the SplitMix64 finalizer applied after folding each index
into the state; the finalizer constants are the published ones.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_FOLD = np.uint64(0xD1B54A32D192ED03)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def counter_bits(seed: int, sample, index, stream: int = 0) -> np.ndarray:
    """64-bit words derived from (seed, sample, index); broadcasts its array args.

    `stream` separates independent uses of the same seed (durations,
    initial conditions, directions, ...).
    """
    with np.errstate(over="ignore"):
        s = np.uint64(np.uint64(seed) + _GOLDEN * np.uint64(stream + 1))
        j = np.asarray(sample, dtype=np.uint64)
        i = np.asarray(index, dtype=np.uint64)
        z = _mix64(s + _GOLDEN * (j + np.uint64(1)))
        z = _mix64(z + _FOLD * (i + np.uint64(1)))
    return z


def uniform01(seed: int, sample, index, stream: int = 0) -> np.ndarray:
    """Uniform draws on [0, 1) with 53-bit resolution."""
    bits = counter_bits(seed, sample, index, stream)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def durations(seed: int, sample, index, horizon: float) -> np.ndarray:
    """Shear durations: iid uniform on [0, horizon)."""
    return uniform01(seed, sample, index, stream=0) * horizon


def duration_matrix(seed: int, n_samples: int, n_durations: int, horizon: float,
                    sample_offset: int = 0) -> np.ndarray:
    """(n_samples, n_durations) block of durations for samples j = offset + row."""
    j = np.arange(sample_offset, sample_offset + n_samples, dtype=np.uint64)[:, None]
    i = np.arange(n_durations, dtype=np.uint64)[None, :]
    return durations(seed, j, i, horizon)
