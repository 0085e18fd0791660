"""Minhash families for the angular distance.

Two generic constructions over any random projection — index of the
maximum projected component, and the sign pattern of the projected
components — instantiated with dense Gaussian, dense random-sign and
sparse feature-hashing projections:

  hyperplane     sign bits over a dense +-1 matrix (d x bits)
  voronoi        argmax over a dense Gaussian matrix (d x T)
  crosspolytope  index+sign of the max absolute Gaussian component
  fh             argmax over a sparse signed matrix (d x T, k per row)
  dfh            sign bits over a sparse signed matrix (d x bits)
  fastcp         sparse reduction d -> m, then crosspolytope over m -> T

A family is (kind, input_dim, seed); minhash index i derives its own
projection seed from (seed, i), so the family is unbounded. Hashing is
invariant under positive scaling of the input.

Tie rules (relevant only for sparse projections on discrete data): the
argmax and max-absolute reductions take the lowest index; sign(0) is +.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels, projections
from ._mix import derive
from .core import DimensionError, DomainError, check_seed

MAX_SIGN_BITS = 62  # compound keys must stay inside 64 bits after banding


def _check_positive(name, value, minimum=1):
    if not isinstance(value, (int, np.integer)) or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class Hyperplane:
    """Sign bits of dense +-1 hyperplanes; range 2**bits."""

    bits: int = 6

    def __post_init__(self):
        _check_positive("bits", self.bits)
        if self.bits > MAX_SIGN_BITS:
            raise DomainError(f"bits must be <= {MAX_SIGN_BITS}, got {self.bits}")


@dataclass(frozen=True)
class Voronoi:
    """Argmax over T Gaussian directions; range T."""

    T: int = 64

    def __post_init__(self):
        _check_positive("T", self.T, minimum=2)


@dataclass(frozen=True)
class CrossPolytope:
    """Index and sign of the max absolute Gaussian component; range 2T."""

    T: int = 64

    def __post_init__(self):
        _check_positive("T", self.T, minimum=2)


@dataclass(frozen=True)
class FeatureHashing:
    """Argmax over a sparse signed projection with k entries per row; range T."""

    T: int = 64
    k: int = 1

    def __post_init__(self):
        _check_positive("T", self.T, minimum=2)
        _check_positive("k", self.k)


@dataclass(frozen=True)
class DirectionalFH:
    """Sign bits over a sparse signed projection; range 2**bits."""

    bits: int = 6
    k: int = 1

    def __post_init__(self):
        _check_positive("bits", self.bits)
        if self.bits > MAX_SIGN_BITS:
            raise DomainError(f"bits must be <= {MAX_SIGN_BITS}, got {self.bits}")
        _check_positive("k", self.k)


@dataclass(frozen=True)
class FastCrossPolytope:
    """Sparse reduction to m dims, then crosspolytope m -> T; range 2T.

    m defaults to min(d, 4T) at hash time when left unset.
    """

    T: int = 64
    k: int = 1
    m: int | None = None

    def __post_init__(self):
        _check_positive("T", self.T, minimum=2)
        _check_positive("k", self.k)
        if self.m is not None:
            _check_positive("m", self.m)


FamilyKind = (
    Hyperplane | Voronoi | CrossPolytope | FeatureHashing | DirectionalFH | FastCrossPolytope
)

_NAMES = {
    Hyperplane: "hyperplane",
    Voronoi: "voronoi",
    CrossPolytope: "crosspolytope",
    FeatureHashing: "fh",
    DirectionalFH: "dfh",
    FastCrossPolytope: "fastcp",
}


def family_range(kind: FamilyKind) -> int:
    """Bucket count m of one minhash: values lie in [0, m)."""
    if isinstance(kind, (Hyperplane, DirectionalFH)):
        return 1 << kind.bits
    if isinstance(kind, (Voronoi, FeatureHashing)):
        return kind.T
    return 2 * kind.T


def resolve_m(kind: FastCrossPolytope, input_dim: int) -> int:
    """Intermediate dimension of a fastcp family for a given input dim."""
    return kind.m if kind.m is not None else min(input_dim, 4 * kind.T)


def format_family(kind: FamilyKind) -> str:
    """Plain-text descriptor, e.g. 'fh:T=64,k=1'."""
    name = _NAMES[type(kind)]
    if isinstance(kind, Hyperplane):
        params = [("bits", kind.bits)]
    elif isinstance(kind, (Voronoi, CrossPolytope)):
        params = [("T", kind.T)]
    elif isinstance(kind, FeatureHashing):
        params = [("T", kind.T), ("k", kind.k)]
    elif isinstance(kind, DirectionalFH):
        params = [("bits", kind.bits), ("k", kind.k)]
    else:
        params = [("T", kind.T), ("k", kind.k)]
        if kind.m is not None:
            params.append(("m", kind.m))
    return name + ":" + ",".join(f"{k}={v}" for k, v in params)


_PARSE = {
    "hyperplane": (Hyperplane, {"bits"}),
    "voronoi": (Voronoi, {"T"}),
    "crosspolytope": (CrossPolytope, {"T"}),
    "fh": (FeatureHashing, {"T", "k"}),
    "dfh": (DirectionalFH, {"bits", "k"}),
    "fastcp": (FastCrossPolytope, {"T", "k", "m"}),
}


def parse_family(text: str) -> FamilyKind:
    """Parse 'name[:key=val[,key=val]*]' into a family kind.

    Unknown names or keys raise DomainError listing the valid options.
    """
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name not in _PARSE:
        raise DomainError(
            f"unknown family {name!r}; valid names: {', '.join(sorted(_PARSE))}"
        )
    cls, allowed = _PARSE[name]
    kwargs = {}
    if rest:
        for item in rest.split(","):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep or key not in allowed:
                raise DomainError(
                    f"bad parameter {item!r} for {name}; valid keys: {', '.join(sorted(allowed))}"
                )
            try:
                kwargs[key] = int(val)
            except ValueError:
                raise DomainError(f"parameter {key} must be an integer, got {val!r}") from None
    return cls(**kwargs)


@dataclass(frozen=True)
class MinhashFamily:
    """A seeded, indexed generator of minhash functions over one kind."""

    kind: FamilyKind
    input_dim: int
    seed: int

    def __post_init__(self):
        _check_positive("input_dim", self.input_dim)
        check_seed(self.seed)

    @property
    def range(self) -> int:
        return family_range(self.kind)

    def descriptor(self) -> str:
        return format_family(self.kind)


# --- reductions on projected vectors -------------------------------------


def argmax_index(w) -> int:
    """Index of the maximum component; ties broken by lowest index."""
    return int(np.argmax(np.asarray(w, dtype=np.float64)))


def sign_bits(w) -> int:
    """Bit i set iff component i >= 0 (sign(0) is +)."""
    w = np.asarray(w, dtype=np.float64)
    powers = np.uint64(1) << np.arange(w.shape[0], dtype=np.uint64)
    return int((w >= 0.0).astype(np.uint64) @ powers)


def cross_polytope_value(w) -> int:
    """2*i + (1 if negative) for i the max-absolute index, ties lowest."""
    w = np.asarray(w, dtype=np.float64)
    i = int(np.argmax(np.abs(w)))
    return 2 * i + (1 if w[i] < 0.0 else 0)


# --- hashes over explicit projections ------------------------------------


def argmax_hash(projection, x, backend=None) -> int:
    """Minhash: index of the max component of the projected vector."""
    return argmax_index(projections.apply(projection, x, backend))


def sign_hash(projection, x, backend=None) -> int:
    """Minhash: sign bitmask of the projected vector."""
    return sign_bits(projections.apply(projection, x, backend))


def cross_polytope_hash(projection, x, backend=None) -> int:
    """Minhash: nearest cross-polytope vertex, encoded 2*i + sign-bit."""
    return cross_polytope_value(projections.apply(projection, x, backend))


def hyperplane_collision_prob(alpha: float, bits: int) -> float:
    """(1 - alpha/pi) ** bits, the analytic hyperplane collision rate."""
    if not 0.0 <= alpha <= math.pi:
        raise DomainError(f"alpha must be in [0, pi], got {alpha}")
    _check_positive("bits", bits)
    return (1.0 - alpha / math.pi) ** bits


# --- family hashing -------------------------------------------------------


@lru_cache(maxsize=4096)
def _projection_for(family: MinhashFamily, index: int):
    """Projection(s) for minhash ``index``; deterministic in (seed, index)."""
    kind, d = family.kind, family.input_dim
    if isinstance(kind, Hyperplane):
        return (projections.make_sign_dense(d, kind.bits, derive(family.seed, index)),)
    if isinstance(kind, Voronoi):
        return (projections.make_gaussian(d, kind.T, derive(family.seed, index)),)
    if isinstance(kind, CrossPolytope):
        return (projections.make_gaussian(d, kind.T, derive(family.seed, index)),)
    if isinstance(kind, FeatureHashing):
        return (projections.make_feature_hashing(d, kind.T, kind.k, derive(family.seed, index)),)
    if isinstance(kind, DirectionalFH):
        return (projections.make_feature_hashing(d, kind.bits, kind.k, derive(family.seed, index)),)
    m = resolve_m(kind, d)
    return (
        projections.make_feature_hashing(d, m, kind.k, derive(family.seed, index, 0)),
        projections.make_gaussian(m, kind.T, derive(family.seed, index, 1)),
    )


def projection_for(family: MinhashFamily, index: int):
    """Public, cached access to the per-index projection tuple."""
    if index < 0:
        raise DomainError(f"minhash index must be >= 0, got {index}")
    return _projection_for(family, index)


def family_hash(family: MinhashFamily, index: int, x, backend=None) -> int:
    """Value of minhash ``index`` on point x, in [0, family.range)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != family.input_dim:
        raise DimensionError(f"expected dim {family.input_dim}, got shape {x.shape}")
    return int(family_hash_batch(family, index, x[None, :], backend)[0])


def family_hash_batch(family: MinhashFamily, index: int, X, backend=None) -> np.ndarray:
    """Minhash ``index`` applied to every row of X; returns uint64 (n,)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != family.input_dim:
        raise DimensionError(f"expected points of dim {family.input_dim}, got shape {X.shape}")
    kind = family.kind
    if isinstance(kind, Hyperplane):
        (P,) = projection_for(family, index)
        return _signbits_rows(X @ P.entries)
    if isinstance(kind, Voronoi):
        (P,) = projection_for(family, index)
        return np.argmax(X @ P.entries, axis=1).astype(np.uint64)
    if isinstance(kind, CrossPolytope):
        (P,) = projection_for(family, index)
        return _crosspoly_rows(X @ P.entries)
    if isinstance(kind, FeatureHashing):
        (P,) = projection_for(family, index)
        return _kernels.fh_argmax(X, P.targets, P.signs, P.cols, backend).astype(np.uint64)
    if isinstance(kind, DirectionalFH):
        (P,) = projection_for(family, index)
        return _kernels.fh_signbits(X, P.targets, P.signs, P.cols, backend)
    fh, rot = projection_for(family, index)
    Y = _kernels.fh_apply(X, fh.targets, fh.signs, fh.cols, backend)
    return _crosspoly_rows(Y @ rot.entries)


def family_hash_many(family: MinhashFamily, indices, X, backend=None) -> np.ndarray:
    """Hash every row of X under several minhash indices: (n, len(indices))."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != family.input_dim:
        raise DimensionError(f"expected points of dim {family.input_dim}, got shape {X.shape}")
    indices = list(indices)
    out = np.empty((X.shape[0], len(indices)), dtype=np.uint64)
    for c, i in enumerate(indices):
        out[:, c] = family_hash_batch(family, i, X, backend)
    return out


def _signbits_rows(W: np.ndarray) -> np.ndarray:
    powers = np.uint64(1) << np.arange(W.shape[1], dtype=np.uint64)
    return (W >= 0.0).astype(np.uint64) @ powers


def _crosspoly_rows(W: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(W), axis=1)
    neg = W[np.arange(W.shape[0]), i] < 0.0
    return (2 * i + neg).astype(np.uint64)
