"""Dense vectors, distances on and off the unit sphere, seeded samplers.

Vectors are plain 1-D float64 numpy arrays. All samplers are pure
functions of (arguments, seed): the 64-bit seed plus a stream path feeds
``numpy.random.SeedSequence``, so parallel experiments can split streams
without coordination.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from ._mix import MASK64

UNIT_NORM_TOL = 1e-9


class JlshError(Exception):
    """Base class for all library errors."""


class DimensionError(JlshError):
    """Operands disagree on dimensionality, or a vector is malformed."""


class ZeroNormError(JlshError):
    """Normalization of the zero vector was requested."""


class DomainError(JlshError):
    """An argument lies outside the documented domain."""


class DuplicateIdError(JlshError):
    """A dataset contains a repeated point id."""


class FormatError(JlshError):
    """A binary input file is malformed.

    ``offset`` is the byte position of the first inconsistent record.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UsageError(JlshError):
    """Bad command-line or configuration input."""


class InfeasibleError(JlshError):
    """No amplification scheme satisfies the requested targets."""


class DistanceKind(enum.Enum):
    """Distance measures for points on (or off) the unit sphere."""

    ANGULAR = "angular"                        # angle in [0, pi]
    EUCLIDEAN_RAW = "euclidean-raw"            # plain l2 distance
    EUCLIDEAN_NORMALIZED = "euclidean-normalized"  # l2 between unit vectors / 2, in [0, 1]


#: kinds that require unit-norm inputs
_SPHERE_ONLY = (DistanceKind.ANGULAR, DistanceKind.EUCLIDEAN_NORMALIZED)


def as_vector(x) -> np.ndarray:
    """Validate and return x as a 1-D float64 array.

    Raises DimensionError for wrong rank or empty input, DomainError for
    non-finite components.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise DimensionError(f"expected a 1-D vector with dim >= 1, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise DomainError("vector has non-finite components")
    return v


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def dot(x, y) -> float:
    """Inner product; raises DimensionError on mismatched dims."""
    x, y = as_vector(x), as_vector(y)
    _check_same_dim(x, y)
    return float(np.dot(x, y))


def norm(x) -> float:
    return float(np.linalg.norm(as_vector(x)))


def normalize(x) -> np.ndarray:
    """x scaled to unit norm; raises ZeroNormError for the zero vector."""
    x = as_vector(x)
    n = np.linalg.norm(x)
    if n == 0.0:
        raise ZeroNormError("cannot normalize the zero vector")
    return x / n


def _require_unit(x: np.ndarray, who: str) -> None:
    if abs(np.linalg.norm(x) - 1.0) > UNIT_NORM_TOL:
        raise DomainError(f"{who} requires unit-norm inputs (tolerance {UNIT_NORM_TOL})")


def distance(x, y, kind: DistanceKind) -> float:
    """Distance between two points under the given kind.

    Angular clamps the dot product to [-1, 1] before arccos so that
    near-identical vectors cannot produce NaN; bitwise-identical inputs
    return exactly 0.
    """
    x, y = as_vector(x), as_vector(y)
    _check_same_dim(x, y)
    if kind in _SPHERE_ONLY:
        _require_unit(x, kind.value)
        _require_unit(y, kind.value)
    if kind is DistanceKind.ANGULAR:
        if np.array_equal(x, y):
            return 0.0
        return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))
    if kind is DistanceKind.EUCLIDEAN_RAW:
        return float(np.linalg.norm(x - y))
    return float(np.linalg.norm(x - y) / 2.0)


def distance_many(q, X, kind: DistanceKind) -> np.ndarray:
    """Distances from q to every row of X (same semantics as ``distance``)."""
    q = as_vector(q)
    X = np.asarray(X, dtype=np.float64)
    _check_same_dim(q, X)
    if kind in _SPHERE_ONLY:
        _require_unit(q, kind.value)
        norms = np.linalg.norm(X, axis=1)
        if np.abs(norms - 1.0).max(initial=0.0) > UNIT_NORM_TOL:
            raise DomainError(f"{kind.value} requires unit-norm inputs")
    if kind is DistanceKind.ANGULAR:
        out = np.arccos(np.clip(X @ q, -1.0, 1.0))
        same = (X == q).all(axis=1)
        if same.any():
            out[same] = 0.0
        return out
    d = np.linalg.norm(X - q[None, :], axis=1)
    return d if kind is DistanceKind.EUCLIDEAN_RAW else d / 2.0


def angle_from_distance(dist: float, kind: DistanceKind) -> float:
    """Convert a distance of the given kind to the angle between unit vectors."""
    if kind is DistanceKind.ANGULAR:
        if not 0.0 <= dist <= math.pi:
            raise DomainError(f"angular distance must be in [0, pi], got {dist}")
        return float(dist)
    if kind is DistanceKind.EUCLIDEAN_RAW:
        if not 0.0 <= dist <= 2.0:
            raise DomainError(f"euclidean distance between unit vectors must be in [0, 2], got {dist}")
        return 2.0 * math.asin(dist / 2.0)
    if not 0.0 <= dist <= 1.0:
        raise DomainError(f"normalized euclidean distance must be in [0, 1], got {dist}")
    return 2.0 * math.asin(dist)


def distance_from_angle(alpha: float, kind: DistanceKind) -> float:
    """Inverse of ``angle_from_distance``."""
    if not 0.0 <= alpha <= math.pi:
        raise DomainError(f"angle must be in [0, pi], got {alpha}")
    if kind is DistanceKind.ANGULAR:
        return float(alpha)
    if kind is DistanceKind.EUCLIDEAN_RAW:
        return 2.0 * math.sin(alpha / 2.0)
    return math.sin(alpha / 2.0)


def check_seed(seed: int) -> int:
    """Validate a 64-bit unsigned seed."""
    if not isinstance(seed, (int, np.integer)):
        raise DomainError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MASK64:
        raise DomainError("seed must fit in 64 unsigned bits")
    return int(seed)


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Generator for (seed, stream path); identical args -> identical stream."""
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed), *stream]))


def sample_unit_vector(dim: int, seed: int) -> np.ndarray:
    """One point uniform on the unit sphere (Gaussian direction, normalized)."""
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    return sample_unit_vectors(dim, 1, seed)[0]


def sample_unit_vectors(dim: int, n: int, seed: int) -> np.ndarray:
    """(n, dim) points uniform on the unit sphere."""
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    rng = rng_for(seed, 0)
    U = rng.standard_normal((n, dim))
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    # a zero draw has probability 0; regenerate any such row defensively
    while (norms == 0.0).any():
        bad = norms[:, 0] == 0.0
        U[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / norms


def sample_pair_at_angle(dim: int, alpha: float, seed: int):
    """A unit pair (u, v) with exact angle alpha between them.

    u is uniform on the sphere; v lies uniformly on the cone at angle
    alpha around u, built from a Gram-Schmidt orthonormal direction.
    """
    U, V = sample_pairs_at_angle(dim, alpha, 1, seed)
    return U[0], V[0]


def sample_pairs_at_angle(dim: int, alpha: float, n: int, seed: int):
    """(U, V) arrays of shape (n, dim); each row pair is at angle alpha."""
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    if not 0.0 <= alpha <= math.pi:
        raise DomainError(f"alpha must be in [0, pi], got {alpha}")
    rng = rng_for(seed, 1)
    U = rng.standard_normal((n, dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    W = rng.standard_normal((n, dim))
    # two Gram-Schmidt passes keep orthogonality at float rounding level
    for _ in range(2):
        W -= (np.einsum("ij,ij->i", W, U))[:, None] * U
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    V = math.cos(alpha) * U + math.sin(alpha) * W
    return U, V
