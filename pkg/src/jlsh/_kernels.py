"""Hot kernels in two lanes: numba @njit and pure numpy.

All functions take/return plain numpy arrays. The sparse (feature
hashing) paths apply signed scatter adds only — each input component is
added or subtracted exactly k times, no multiplications — which is the
whole speed story of the sparse families. The numpy lane reproduces the
same results with ufunc.at scatter adds.

Every public entry point accepts ``backend=None`` (use the lane selected
at import, see ``_backend``) or an explicit "numba"/"numpy".
"""

from __future__ import annotations

import numpy as np

from . import _backend
from ._mix import GOLDEN, MASK64, combine_np

__all__ = [
    "fh_apply",
    "fh_argmax",
    "fh_signbits",
    "compound_keys",
    "available_backends",
]


# --- numpy lane ---------------------------------------------------------


def _fh_apply_np(X, targets, signs, cols):
    n, d = X.shape
    k = targets.shape[1]
    out = np.zeros((n, cols), dtype=np.float64)
    out_t = out.T  # scatter along the column axis
    for j in range(k):
        pos = signs[:, j] > 0
        if pos.any():
            np.add.at(out_t, targets[pos, j], X.T[pos])
        if not pos.all():
            np.subtract.at(out_t, targets[~pos, j], X.T[~pos])
    return out


def _fh_argmax_np(X, targets, signs, cols):
    return np.argmax(_fh_apply_np(X, targets, signs, cols), axis=1).astype(np.int64)


def _fh_signbits_np(X, targets, signs, cols):
    W = _fh_apply_np(X, targets, signs, cols)
    powers = np.uint64(1) << np.arange(cols, dtype=np.uint64)
    return (W >= 0.0).astype(np.uint64) @ powers


def _compound_keys_np(H, salt):
    keys = np.full(H.shape[0], np.uint64(salt & MASK64), dtype=np.uint64)
    for s in range(H.shape[1]):
        keys = combine_np(keys, H[:, s].astype(np.uint64))
    return keys


_NUMPY_IMPL = {
    "fh_apply": _fh_apply_np,
    "fh_argmax": _fh_argmax_np,
    "fh_signbits": _fh_signbits_np,
    "compound_keys": _compound_keys_np,
}


# --- numba lane ---------------------------------------------------------

_NUMBA_IMPL = {}

if _backend.NUMBA_AVAILABLE:
    from numba import njit

    _U_GOLDEN = np.uint64(GOLDEN)
    _U_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
    _U_MULT2 = np.uint64(0x94D049BB133111EB)
    _U30 = np.uint64(30)
    _U27 = np.uint64(27)
    _U31 = np.uint64(31)

    @njit(cache=True)
    def _mix64_nb(z):
        z = np.uint64(z)
        z ^= z >> _U30
        z *= _U_MULT1
        z ^= z >> _U27
        z *= _U_MULT2
        z ^= z >> _U31
        return z

    @njit(cache=True)
    def _combine_nb(h, x):
        return _mix64_nb(np.uint64(h) + _U_GOLDEN + np.uint64(x))

    @njit(cache=True)
    def _fh_apply_nb(X, targets, signs, cols):
        n, d = X.shape
        k = targets.shape[1]
        out = np.zeros((n, cols), dtype=np.float64)
        for p in range(n):
            for i in range(d):
                v = X[p, i]
                for j in range(k):
                    if signs[i, j] > 0:
                        out[p, targets[i, j]] += v
                    else:
                        out[p, targets[i, j]] -= v
        return out

    @njit(cache=True)
    def _fh_argmax_nb(X, targets, signs, cols):
        n, d = X.shape
        k = targets.shape[1]
        out = np.empty(n, dtype=np.int64)
        buf = np.empty(cols, dtype=np.float64)
        for p in range(n):
            for c in range(cols):
                buf[c] = 0.0
            for i in range(d):
                v = X[p, i]
                for j in range(k):
                    if signs[i, j] > 0:
                        buf[targets[i, j]] += v
                    else:
                        buf[targets[i, j]] -= v
            best = 0
            for c in range(1, cols):
                if buf[c] > buf[best]:
                    best = c
            out[p] = best
        return out

    @njit(cache=True)
    def _fh_signbits_nb(X, targets, signs, cols):
        n, d = X.shape
        k = targets.shape[1]
        out = np.empty(n, dtype=np.uint64)
        buf = np.empty(cols, dtype=np.float64)
        one = np.uint64(1)
        for p in range(n):
            for c in range(cols):
                buf[c] = 0.0
            for i in range(d):
                v = X[p, i]
                for j in range(k):
                    if signs[i, j] > 0:
                        buf[targets[i, j]] += v
                    else:
                        buf[targets[i, j]] -= v
            bits = np.uint64(0)
            for c in range(cols):
                if buf[c] >= 0.0:
                    bits |= one << np.uint64(c)
            out[p] = bits
        return out

    @njit(cache=True)
    def _compound_keys_nb(H, salt):
        n, r = H.shape
        out = np.empty(n, dtype=np.uint64)
        for p in range(n):
            h = np.uint64(salt)
            for s in range(r):
                h = _combine_nb(h, H[p, s])
            out[p] = h
        return out

    _NUMBA_IMPL = {
        "fh_apply": _fh_apply_nb,
        "fh_argmax": _fh_argmax_nb,
        "fh_signbits": _fh_signbits_nb,
        "compound_keys": _compound_keys_nb,
    }

_IMPLS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL:
    _IMPLS["numba"] = _NUMBA_IMPL


def available_backends():
    """Backends usable in this process, fallback lane first."""
    return tuple(_IMPLS)


def _impl(name, backend):
    lane = _backend.ACTIVE if backend is None else backend
    try:
        return _IMPLS[lane][name]
    except KeyError:
        raise ValueError(f"backend {lane!r} not available (have {tuple(_IMPLS)})") from None


def _as_batch(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def fh_apply(X, targets, signs, cols, backend=None):
    """Signed scatter projection of rows of X: (n, d) -> (n, cols)."""
    return _impl("fh_apply", backend)(_as_batch(X), targets, signs, cols)


def fh_argmax(X, targets, signs, cols, backend=None):
    """Index of the max projected component per row (ties: lowest index)."""
    return _impl("fh_argmax", backend)(_as_batch(X), targets, signs, cols)


def fh_signbits(X, targets, signs, cols, backend=None):
    """Per-row sign bitmask of the projection; component c >= 0 sets bit c."""
    return _impl("fh_signbits", backend)(_as_batch(X), targets, signs, cols)


def compound_keys(H, salt, backend=None):
    """Order-sensitive 64-bit key per row of minhash values H (n, r)."""
    H = np.ascontiguousarray(H, dtype=np.uint64)
    if H.ndim == 1:
        H = H[None, :]
    return _impl("compound_keys", backend)(H, np.uint64(salt & MASK64))
