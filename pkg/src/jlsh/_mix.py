"""Portable 64-bit mixing used by every seeded component.

The finalizer is the splitmix64 avalanche (two xor-shift-multiply rounds
plus a final shift). ``combine`` absorbs one word into a running state
with a full avalanche per step, which makes derived streams
order-sensitive. The same function exists in three forms: plain python
ints (reference), vectorized numpy uint64, and an njit scalar inside
``_kernels``; tests pin all three to identical outputs.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a python int, reduced mod 2**64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def combine(h: int, x: int) -> int:
    """Absorb one word into state ``h``; order-sensitive."""
    return mix64((h + GOLDEN + x) & MASK64)


def derive(seed: int, *parts: int) -> int:
    """Derive a child seed from a root seed and a path of integers."""
    h = combine(0, seed & MASK64)
    for p in parts:
        h = combine(h, p & MASK64)
    return h


# --- numpy lane ---------------------------------------------------------

_NP_GOLDEN = np.uint64(GOLDEN)
_NP_MULT1 = np.uint64(_MULT1)
_NP_MULT2 = np.uint64(_MULT2)
_NP_30 = np.uint64(30)
_NP_27 = np.uint64(27)
_NP_31 = np.uint64(31)


def mix64_np(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over a uint64 array."""
    z = np.asarray(z, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):  # mod-2**64 wrap is the definition
        z ^= z >> _NP_30
        z *= _NP_MULT1
        z ^= z >> _NP_27
        z *= _NP_MULT2
        z ^= z >> _NP_31
    return z


def combine_np(h, x) -> np.ndarray:
    """Vectorized ``combine``; broadcasts h against x."""
    h = np.asarray(h, dtype=np.uint64)
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(h + _NP_GOLDEN + x)


def fh_word(seed: int, i: int, j: int) -> int:
    """Mixed word controlling the feature-hashing entry for row i, slot j."""
    return derive(seed, i, j)


def fh_target_sign(seed: int, i: int, j: int, cols: int) -> tuple[int, int]:
    """(target column, sign) for input dimension i, slot j.

    Low bits modulo ``cols`` pick the column; bit 63 picks the sign
    (set -> -1). Modulo bias is negligible for cols << 2**32.
    """
    w = fh_word(seed, i, j)
    return w % cols, (-1 if (w >> 63) & 1 else 1)


def fh_mapping(seed: int, rows: int, k: int, cols: int):
    """Full (targets, signs) arrays for a feature-hashing projection.

    Returns int64 targets of shape (rows, k) and int8 signs of the same
    shape, computed with the vectorized mixer; identical to calling
    ``fh_target_sign`` per entry.
    """
    i = np.arange(rows, dtype=np.uint64)[:, None]
    j = np.arange(k, dtype=np.uint64)[None, :]
    h = combine_np(np.uint64(0), np.uint64(seed & MASK64))
    w = combine_np(combine_np(h, i), j)
    targets = (w % np.uint64(cols)).astype(np.int64)
    signs = np.where((w >> np.uint64(63)) & np.uint64(1), -1, 1).astype(np.int8)
    return targets, signs
