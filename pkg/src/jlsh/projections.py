"""Seeded Johnson-Lindenstrauss projections.

Three kinds share one ``apply`` surface: dense Gaussian, dense random
sign, and sparse signed feature hashing (per input dimension, k signed
targets drawn from a 64-bit avalanche mixer over (seed, row, slot)).
Sparse application is pure scatter add/subtract; ``materialize`` builds
the equivalent dense matrix for tests and inspection.

No 1/sqrt(k) output scaling is applied: the downstream argmax and sign
hashes are invariant under positive scaling, so the scale factor is
irrelevant to hashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._mix import combine_np, derive, fh_mapping
from .core import DimensionError, DomainError, check_seed, rng_for

GAUSSIAN = "gaussian"
SIGN_BERNOULLI = "sign"


@dataclass(frozen=True, eq=False)
class DenseProjection:
    """A materialized dense random matrix of shape (rows, cols)."""

    rows: int
    cols: int
    kind: str
    seed: int
    entries: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SparseSignedProjection:
    """Feature-hashing matrix: k signed targets per input dimension.

    ``targets[i, j]`` and ``signs[i, j]`` are fully determined by
    (seed, i, j); collisions within a row are merged by signed summation
    when materialized, so merged entries lie in [-k, k].
    """

    rows: int
    cols: int
    k: int
    seed: int
    targets: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class ExplicitFhMapping:
    """A feature-hashing mapping supplied by hand instead of a seed."""

    rows: int
    cols: int
    k: int
    targets: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)

    @classmethod
    def from_lists(cls, targets, signs, cols: int) -> "ExplicitFhMapping":
        """Build from per-row target/sign sequences (k=1) or (rows, k) arrays."""
        t = np.asarray(targets, dtype=np.int64)
        s = np.asarray(signs, dtype=np.int8)
        if t.ndim == 1:
            t = t[:, None]
        if s.ndim == 1:
            s = s[:, None]
        if t.shape != s.shape:
            raise DimensionError(f"targets shape {t.shape} != signs shape {s.shape}")
        if t.size and (t.min() < 0 or t.max() >= cols):
            raise DomainError(f"targets must lie in [0, {cols})")
        if not np.isin(s, (-1, 1)).all():
            raise DomainError("signs must be +1 or -1")
        return cls(rows=t.shape[0], cols=cols, k=t.shape[1], targets=t, signs=s)


def make_gaussian(rows: int, cols: int, seed: int) -> DenseProjection:
    """Dense projection with i.i.d. standard normal entries."""
    _check_shape(rows, cols)
    rng = rng_for(check_seed(seed), 2)
    return DenseProjection(rows, cols, GAUSSIAN, seed, rng.standard_normal((rows, cols)))


def make_sign_dense(rows: int, cols: int, seed: int) -> DenseProjection:
    """Dense projection with equiprobable +-1 entries."""
    _check_shape(rows, cols)
    rng = rng_for(check_seed(seed), 3)
    entries = np.where(rng.random((rows, cols)) < 0.5, -1.0, 1.0)
    return DenseProjection(rows, cols, SIGN_BERNOULLI, seed, entries)


def make_feature_hashing(rows: int, cols: int, k: int, seed: int) -> SparseSignedProjection:
    """Sparse signed projection with k hash slots per input dimension."""
    _check_shape(rows, cols)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    targets, signs = fh_mapping(check_seed(seed), rows, k, cols)
    return SparseSignedProjection(rows, cols, k, seed, targets, signs)


def _check_shape(rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise DomainError(f"projection shape must be positive, got {rows}x{cols}")


Projection = DenseProjection | SparseSignedProjection | ExplicitFhMapping


def apply(projection: Projection, x, backend=None) -> np.ndarray:
    """Project a single vector: returns x @ M with dim ``cols``.

    Sparse kinds run the add/subtract scatter kernel; each input
    component is touched exactly k times and never multiplied.
    """
    return apply_batch(projection, np.asarray(x, dtype=np.float64)[None, :], backend)[0]


def apply_batch(projection: Projection, X, backend=None) -> np.ndarray:
    """Project rows of X: (n, rows) -> (n, cols)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != projection.rows:
        raise DimensionError(
            f"expected points of dim {projection.rows}, got shape {X.shape}"
        )
    if isinstance(projection, DenseProjection):
        return X @ projection.entries
    return _kernels.fh_apply(X, projection.targets, projection.signs, projection.cols, backend)


def apply_with_mapping(mapping: ExplicitFhMapping, x, backend=None) -> np.ndarray:
    """``apply`` for a hand-written mapping (golden-value tests)."""
    return apply(mapping, x, backend)


def materialize(projection: Projection) -> np.ndarray:
    """The dense (rows, cols) matrix this projection multiplies by."""
    if isinstance(projection, DenseProjection):
        return projection.entries.copy()
    M = np.zeros((projection.rows, projection.cols), dtype=np.float64)
    for j in range(projection.k):
        np.add.at(M, (np.arange(projection.rows), projection.targets[:, j]),
                  projection.signs[:, j].astype(np.float64))
    return M


def fh_norm_scale_estimate(rows: int, cols: int, k: int, seed: int, trials: int) -> float:
    """Mean of ||x M||^2 / ||x||^2 over fresh unit vectors and fresh mappings.

    The expectation is k: signs are independent across (row, slot), so
    cross terms cancel and each slot contributes ||x||^2 / cols per
    column.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = rng_for(check_seed(seed), 4)
    V = rng.standard_normal((trials, rows))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    W = np.zeros((trials, cols), dtype=np.float64)
    flat = W.ravel()
    row_offset = np.arange(trials, dtype=np.int64)[:, None] * cols
    # fresh mapping per trial: same mix chain as make_feature_hashing with
    # per-trial seed derive(seed, 5, trial), vectorized over all trials
    trial_seeds = combine_np(derive(seed, 5), np.arange(trials, dtype=np.uint64))
    trial_heads = combine_np(np.uint64(0), trial_seeds)
    heads_i = combine_np(trial_heads[:, None], np.arange(rows, dtype=np.uint64)[None, :])
    for j in range(k):
        w = combine_np(heads_i, np.uint64(j))
        targets = (w % np.uint64(cols)).astype(np.int64)
        signs = np.where((w >> np.uint64(63)) & np.uint64(1), -1.0, 1.0)
        np.add.at(flat, (row_offset + targets).ravel(), (V * signs).ravel())
    return float(np.mean(np.sum(W * W, axis=1)))


def dump_projection_csv(projection: Projection, path) -> None:
    """Debug dump of the materialized matrix as (row, col, value) rows."""
    M = materialize(projection)
    with open(path, "w", encoding="utf-8") as f:
        f.write("row,col,value\n")
        for i, j in zip(*np.nonzero(M)):
            f.write(f"{i},{j},{M[i, j]:.17g}\n")
