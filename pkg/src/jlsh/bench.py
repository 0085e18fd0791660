"""Side-by-side timing of the numba and numpy kernel lanes.

Only kernels with two real implementations are compared (the sparse
scatter hashes and compound-key mixing); dense projections go through
BLAS in both lanes, so they are reported once. Wall clock is
informational; the portable speed claim is the operation counts in
``jlsh.opcount``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, families
from ._mix import derive
from .core import sample_unit_vectors


@dataclass(frozen=True)
class LaneTiming:
    family_spec: str
    backend: str
    ns_per_hash: float


def compare_backends(family_specs, dim: int, n_points: int, seed: int, repeats: int = 3):
    """Time one minhash over n_points for each family on every lane."""
    X = sample_unit_vectors(dim, n_points, derive(seed, 81))
    rows = []
    for spec in family_specs:
        family = families.MinhashFamily(families.parse_family(spec), dim, derive(seed, 82))
        for backend in _kernels.available_backends():
            families.family_hash_batch(family, 0, X[:16], backend)  # warm JIT/caches
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                families.family_hash_batch(family, 0, X, backend)
                best = min(best, time.perf_counter() - t0)
            rows.append(LaneTiming(spec, backend, best / n_points * 1e9))
    return rows


def verify_lane_agreement(family_specs, dim: int, n_points: int, seed: int) -> bool:
    """Assert both lanes hash identically; returns True (raises otherwise)."""
    lanes = _kernels.available_backends()
    if len(lanes) < 2:
        return True
    X = sample_unit_vectors(dim, n_points, derive(seed, 83))
    for spec in family_specs:
        family = families.MinhashFamily(families.parse_family(spec), dim, derive(seed, 84))
        ref = families.family_hash_batch(family, 0, X, lanes[0])
        for lane in lanes[1:]:
            got = families.family_hash_batch(family, 0, X, lane)
            if not np.array_equal(ref, got):
                raise AssertionError(f"lane disagreement for {spec}: {lanes[0]} vs {lane}")
    return True
