"""Instrumented arithmetic for exact per-hash operation counts.

This is the portable version of the speed claim: instead of timing, an
evaluation is replayed through a counter that tallies every addition,
subtraction, multiplication and comparison actually performed. Counts
are exact integers independent of hardware.

Counting rules:
  dense Gaussian column     one multiplication + one addition per entry
  dense +-1 column          one addition or subtraction per entry
  sparse signed projection  one addition or subtraction per (row, slot)
  argmax over d' values     d' - 1 comparisons
  sign bits over d' values  d' comparisons
  max-abs + sign (2T hash)  d' comparisons (d' - 1 for the max, 1 for the sign)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import families, projections
from .core import DimensionError


@dataclass
class OpCounts:
    additions: int = 0
    subtractions: int = 0
    multiplications: int = 0
    comparisons: int = 0

    @property
    def add_sub(self) -> int:
        return self.additions + self.subtractions


def apply_counted(projection, x, counts: OpCounts) -> np.ndarray:
    """Project x while tallying every arithmetic operation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != projection.rows:
        raise DimensionError(f"expected dim {projection.rows}, got shape {x.shape}")
    out = np.zeros(projection.cols, dtype=np.float64)
    if isinstance(projection, projections.DenseProjection):
        entries = projection.entries
        sign_only = projection.kind == projections.SIGN_BERNOULLI
        for c in range(projection.cols):
            acc = 0.0
            for i in range(projection.rows):
                if sign_only:
                    if entries[i, c] > 0.0:
                        acc += x[i]
                        counts.additions += 1
                    else:
                        acc -= x[i]
                        counts.subtractions += 1
                else:
                    acc += x[i] * entries[i, c]
                    counts.multiplications += 1
                    counts.additions += 1
            out[c] = acc
    else:
        for i in range(projection.rows):
            for j in range(projection.k):
                t = projection.targets[i, j]
                if projection.signs[i, j] > 0:
                    out[t] += x[i]
                    counts.additions += 1
                else:
                    out[t] -= x[i]
                    counts.subtractions += 1
    return out


def _argmax_counted(w, counts: OpCounts) -> int:
    best = 0
    for c in range(1, len(w)):
        counts.comparisons += 1
        if w[c] > w[best]:
            best = c
    return best


def _signbits_counted(w, counts: OpCounts) -> int:
    bits = 0
    for c in range(len(w)):
        counts.comparisons += 1
        if w[c] >= 0.0:
            bits |= 1 << c
    return bits


def _crosspoly_counted(w, counts: OpCounts) -> int:
    a = np.abs(w)
    i = _argmax_counted(a, counts)
    counts.comparisons += 1
    return 2 * i + (1 if w[i] < 0.0 else 0)


def family_hash_counted(family: families.MinhashFamily, index: int, x) -> tuple[int, OpCounts]:
    """One minhash evaluation with exact operation counts."""
    counts = OpCounts()
    kind = family.kind
    ps = families.projection_for(family, index)
    if isinstance(kind, families.FastCrossPolytope):
        y = apply_counted(ps[0], x, counts)
        w = apply_counted(ps[1], y, counts)
        return _crosspoly_counted(w, counts), counts
    w = apply_counted(ps[0], x, counts)
    if isinstance(kind, (families.Voronoi, families.FeatureHashing)):
        return _argmax_counted(w, counts), counts
    if isinstance(kind, (families.Hyperplane, families.DirectionalFH)):
        return _signbits_counted(w, counts), counts
    return _crosspoly_counted(w, counts), counts
