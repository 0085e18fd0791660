"""Multi-table LSH index.

b tables, each keyed by a single 64-bit compound key mixed from the r
minhash values of the table's global indices [t*r, (t+1)*r). A single
hash-map lookup per table replaces the r-way bucket intersection: a
point matches iff every one of the r minhashes matches, which is the
same membership the intersection would compute (cross-tuple mixer
collisions are negligible and covered by the soundness tests).

Vectors are stored once in a shared array; tables hold row positions.
After build the index is immutable and safe for concurrent queries.
"""

from __future__ import annotations

import io
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, families
from ._mix import derive
from .core import (
    DimensionError,
    DistanceKind,
    DomainError,
    DuplicateIdError,
    FormatError,
    check_seed,
    distance_many,
)
from .amplify import AmplifiedScheme

_MAGIC = b"JLSHIDX1"
_VERSION = 1


@dataclass
class QueryStats:
    candidates_examined: int = 0
    tables_hit: int = 0
    distance_evaluations: int = 0


@dataclass(frozen=True, eq=False)
class LshTable:
    table_id: int
    hash_indices: np.ndarray  # global minhash indices, shape (r,)
    buckets: dict  # compound key (int) -> np.ndarray of row positions


@dataclass(frozen=True, eq=False)
class LshIndex:
    family: families.MinhashFamily
    scheme: AmplifiedScheme
    seed: int
    ids: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    tables: list = field(repr=False)

    def __len__(self) -> int:
        return self.ids.shape[0]


def _table_salt(seed: int, table_id: int) -> int:
    return derive(seed, 23, table_id)


def build_index(vectors, family: families.MinhashFamily, scheme: AmplifiedScheme,
                seed: int, ids=None, backend=None) -> LshIndex:
    """Hash every point into one bucket per table; deterministic in seed."""
    check_seed(seed)
    V = np.ascontiguousarray(vectors, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] != family.input_dim:
        raise DimensionError(
            f"expected points of dim {family.input_dim}, got shape {V.shape}")
    n = V.shape[0]
    if ids is None:
        ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise DimensionError(f"ids shape {ids.shape} does not match {n} points")
        if np.unique(ids).shape[0] != n:
            raise DuplicateIdError("point ids must be unique")
    r, b = scheme.r, scheme.b
    H = families.family_hash_many(family, range(r * b), V, backend) if n else \
        np.empty((0, r * b), dtype=np.uint64)
    tables = []
    for t in range(b):
        keys = _kernels.compound_keys(H[:, t * r:(t + 1) * r], _table_salt(seed, t),
                                      backend) if n else np.empty(0, dtype=np.uint64)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        uniq, starts = np.unique(sorted_keys, return_index=True)
        bounds = np.append(starts, n)
        buckets = {int(k): order[bounds[i]:bounds[i + 1]]
                   for i, k in enumerate(uniq)}
        tables.append(LshTable(t, np.arange(t * r, (t + 1) * r, dtype=np.int64), buckets))
    return LshIndex(family, scheme, seed, ids, V, tables)


def _query_keys(index: LshIndex, q, backend=None) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.family.input_dim:
        raise DimensionError(
            f"expected query of dim {index.family.input_dim}, got shape {q.shape}")
    r, b = index.scheme.r, index.scheme.b
    H = families.family_hash_many(index.family, range(r * b), q[None, :], backend)
    return np.array([
        _kernels.compound_keys(H[:, t * r:(t + 1) * r], _table_salt(index.seed, t),
                               backend)[0]
        for t in range(b)
    ], dtype=np.uint64)


def query_candidates(index: LshIndex, q, backend=None):
    """Union over tables of the bucket matching q's compound key.

    Returns (ids ascending, QueryStats).
    """
    keys = _query_keys(index, q, backend)
    hits = []
    tables_hit = 0
    for t, key in enumerate(keys):
        bucket = index.tables[t].buckets.get(int(key))
        if bucket is not None and bucket.size:
            hits.append(bucket)
            tables_hit += 1
    if hits:
        positions = np.unique(np.concatenate(hits))
        cand_ids = np.sort(index.ids[positions])
    else:
        positions = np.empty(0, dtype=np.int64)
        cand_ids = np.empty(0, dtype=np.int64)
    stats = QueryStats(candidates_examined=int(positions.size), tables_hit=tables_hit)
    return cand_ids, stats


def query_knn(index: LshIndex, q, k_neighbors: int, kind: DistanceKind, backend=None):
    """Exact distances over the candidate set only; ascending, ties by id.

    Returns (list of (id, distance), QueryStats).
    """
    if k_neighbors < 1:
        raise DomainError(f"k_neighbors must be >= 1, got {k_neighbors}")
    keys = _query_keys(index, q, backend)
    hits = []
    tables_hit = 0
    for t, key in enumerate(keys):
        bucket = index.tables[t].buckets.get(int(key))
        if bucket is not None and bucket.size:
            hits.append(bucket)
            tables_hit += 1
    if not hits:
        return [], QueryStats(0, 0, 0)
    positions = np.unique(np.concatenate(hits))
    cand_ids = index.ids[positions]
    dists = distance_many(q, index.vectors[positions], kind)
    order = np.lexsort((cand_ids, dists))[:k_neighbors]
    stats = QueryStats(candidates_examined=int(positions.size), tables_hit=tables_hit,
                       distance_evaluations=int(positions.size))
    return [(int(cand_ids[i]), float(dists[i])) for i in order], stats


def occupancy_report(index: LshIndex):
    """Per table, a histogram {bucket size: bucket count}."""
    return [dict(Counter(len(v) for v in t.buckets.values())) for t in index.tables]


# --- snapshot format ------------------------------------------------------
#
# little-endian throughout:
#   8s   magic "JLSHIDX1"
#   u32  version
#   u16  len(descriptor) + descriptor utf-8 (family kind and parameters)
#   u32  input_dim
#   u64  family seed
#   u32  r, u32 b
#   u64  index seed
#   u64  N
#   N*i64             ids
#   N*input_dim*f64   vectors (row-major)
#   per table t in [0, b): u64 bucket count, then per bucket:
#       u64 key, u64 size, size*i64 row positions


def save_index(index: LshIndex, path) -> None:
    with open(path, "wb") as f:
        _write_index(index, f)


def _write_index(index: LshIndex, f) -> None:
    desc = index.family.descriptor().encode("utf-8")
    f.write(_MAGIC)
    f.write(struct.pack("<IH", _VERSION, len(desc)))
    f.write(desc)
    f.write(struct.pack("<IQII", index.family.input_dim, index.family.seed,
                        index.scheme.r, index.scheme.b))
    f.write(struct.pack("<QQ", index.seed, len(index)))
    f.write(index.ids.astype("<i8").tobytes())
    f.write(index.vectors.astype("<f8").tobytes())
    for t in index.tables:
        f.write(struct.pack("<Q", len(t.buckets)))
        for key in sorted(t.buckets):
            pos = t.buckets[key]
            f.write(struct.pack("<QQ", key, pos.size))
            f.write(pos.astype("<i8").tobytes())


def load_index(path) -> LshIndex:
    with open(path, "rb") as f:
        data = f.read()
    return _read_index(io.BytesIO(data))


def _read_index(f) -> LshIndex:
    def need(n, what):
        start = f.tell()
        buf = f.read(n)
        if len(buf) != n:
            raise FormatError(f"truncated index snapshot while reading {what}", offset=start)
        return buf

    if need(8, "magic") != _MAGIC:
        raise FormatError("bad magic; not an index snapshot", offset=0)
    version, desc_len = struct.unpack("<IH", need(6, "header"))
    if version != _VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    kind = families.parse_family(need(desc_len, "descriptor").decode("utf-8"))
    dim, fam_seed, r, b = struct.unpack("<IQII", need(20, "family header"))
    idx_seed, n = struct.unpack("<QQ", need(16, "index header"))
    ids = np.frombuffer(need(8 * n, "ids"), dtype="<i8").copy()
    vectors = np.frombuffer(need(8 * n * dim, "vectors"), dtype="<f8").reshape(n, dim).copy()
    family = families.MinhashFamily(kind, dim, fam_seed)
    scheme = AmplifiedScheme(r, b)
    tables = []
    for t in range(b):
        (n_buckets,) = struct.unpack("<Q", need(8, "bucket count"))
        buckets = {}
        for _ in range(n_buckets):
            key, sz = struct.unpack("<QQ", need(16, "bucket header"))
            buckets[key] = np.frombuffer(need(8 * sz, "bucket rows"), dtype="<i8").copy()
        tables.append(LshTable(t, np.arange(t * r, (t + 1) * r, dtype=np.int64), buckets))
    return LshIndex(family, scheme, idx_seed, ids, vectors, tables)
