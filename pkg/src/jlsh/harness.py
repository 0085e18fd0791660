"""Experiment suite: collision curves, parameter tables, recall studies,
operation-count benchmarks, and dataset ingestion.

Every experiment is a pure function of its arguments including the seed;
per-unit seeds are derived from (seed, unit index) so results do not
depend on evaluation order. CSV outputs use 17 significant digits and
round-trip exactly.
"""

from __future__ import annotations

import csv
import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import amplify, families, index as index_mod, opcount
from ._mix import derive
from .core import (
    DistanceKind,
    DomainError,
    FormatError,
    angle_from_distance,
    check_seed,
    rng_for,
    sample_pairs_at_angle,
    sample_unit_vectors,
)

_GT_MAGIC = b"JLSHGT01"


@dataclass(frozen=True, eq=False)
class CollisionCurve:
    family_spec: str
    kind: DistanceKind
    grid: np.ndarray = field(repr=False)
    p_hat: np.ndarray = field(repr=False)
    std_err: np.ndarray = field(repr=False)
    trials: int = 0
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully determines one experiment run."""

    dim: int = 128
    n_points: int = 10_000
    fvecs_path: str | None = None
    family_specs: tuple = ("hyperplane:bits=6", "voronoi:T=64", "crosspolytope:T=64",
                           "fh:T=64,k=1", "dfh:bits=6,k=1", "fastcp:T=64,k=1")
    d1: float = 0.2
    d2: float = 0.6
    p1_min: float = 0.95
    p2_max: float = 0.05
    kind: DistanceKind = DistanceKind.EUCLIDEAN_RAW
    trials: int = 100_000
    seed: int = 0
    out_dir: str = "."

    def __post_init__(self):
        check_seed(self.seed)
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.dim < 2:
            raise DomainError("dim must be >= 2")
        for spec in self.family_specs:
            families.parse_family(spec)
        amplify.SensitivityTarget(self.d1, self.d2, self.p1_min, self.p2_max)

    def target(self) -> amplify.SensitivityTarget:
        return amplify.SensitivityTarget(self.d1, self.d2, self.p1_min, self.p2_max)


def default_grid(kind: DistanceKind, points: int = 21) -> np.ndarray:
    """Uniform grid over the kind's full range ([0,1] normalized, etc.)."""
    top = {DistanceKind.ANGULAR: math.pi,
           DistanceKind.EUCLIDEAN_RAW: 2.0,
           DistanceKind.EUCLIDEAN_NORMALIZED: 1.0}[kind]
    return np.linspace(0.0, top, points)


def estimate_collision_curve(family: families.MinhashFamily, grid, trials: int,
                             seed: int, kind: DistanceKind = DistanceKind.EUCLIDEAN_NORMALIZED,
                             backend=None) -> CollisionCurve:
    """Collision frequency of one minhash over `trials` pairs per grid distance.

    Pair draws depend only on (seed, grid position), not on the family:
    estimating several families with one seed reuses the same pairs.
    """
    return estimate_collision_curves([family], grid, trials, seed, kind, backend)[0]


def estimate_collision_curves(family_list, grid, trials: int, seed: int,
                              kind: DistanceKind = DistanceKind.EUCLIDEAN_NORMALIZED,
                              backend=None):
    """Curves for several families over one shared set of pair draws.

    Identical to calling ``estimate_collision_curve`` per family with the
    same seed (pair seeds never depend on the family); sampling each grid
    point once just avoids regenerating the pairs.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size and not (np.diff(grid) > 0).all():
        raise DomainError("grid must be strictly ascending")
    if len({f.input_dim for f in family_list}) > 1:
        raise DomainError("families disagree on input dim")
    p_hat = np.empty((len(family_list), grid.size))
    std_err = np.empty_like(p_hat)
    dim = family_list[0].input_dim
    for gi, dist in enumerate(grid):
        alpha = angle_from_distance(float(dist), kind)
        U, V = sample_pairs_at_angle(dim, alpha, trials, derive(seed, 31, gi))
        for fi, family in enumerate(family_list):
            hu = families.family_hash_batch(family, 0, U, backend)
            hv = families.family_hash_batch(family, 0, V, backend)
            p = float(np.mean(hu == hv))
            p_hat[fi, gi] = p
            std_err[fi, gi] = math.sqrt(p * (1.0 - p) / trials)
    return [CollisionCurve(f.descriptor(), kind, grid.copy(), p_hat[fi].copy(),
                           std_err[fi].copy(), trials, seed)
            for fi, f in enumerate(family_list)]


@dataclass(frozen=True)
class Table1Row:
    family_spec: str
    r: int
    b: int
    total: int
    p1_hat: float
    p2_hat: float
    p1_err: float
    p2_err: float
    p1_amp: float
    p2_amp: float
    feasible: bool = True


def table1_experiment(config: ExperimentConfig, backend=None):
    """Per family: estimate base probabilities at (d1, d2), solve (r, b).

    Infeasible families are reported with r = b = 0 rather than raised.
    """
    target = config.target()
    rows = []
    for spec in config.family_specs:
        family = families.MinhashFamily(families.parse_family(spec), config.dim,
                                        derive(config.seed, 41))
        p1, e1 = amplify.estimate_base_probability(
            family, config.d1, config.kind, config.trials, derive(config.seed, 42, 0), backend)
        p2, e2 = amplify.estimate_base_probability(
            family, config.d2, config.kind, config.trials, derive(config.seed, 42, 1), backend)
        try:
            scheme = amplify.solve_parameters(p1, p2, target)
            rows.append(Table1Row(
                spec, scheme.r, scheme.b, scheme.total, p1, p2, e1, e2,
                amplify.amplified_probability(p1, scheme.r, scheme.b),
                amplify.amplified_probability(p2, scheme.r, scheme.b)))
        except amplify.InfeasibleError:
            rows.append(Table1Row(spec, 0, 0, 0, p1, p2, e1, e2, 0.0, 0.0, feasible=False))
    return rows


def make_planted_dataset(n: int, dim: int, n_queries: int, k: int, radius: float,
                         kind: DistanceKind, seed: int):
    """Synthetic recall testbed: for each query, k points within `radius`.

    Returns (vectors (n, dim), queries (n_queries, dim)). The first
    n_queries*k rows are the planted neighbors (k per query, at angles
    uniform in (0, radius)); the rest are uniform on the sphere, which at
    moderate dim puts them far outside the radius with overwhelming
    probability.
    """
    if n < n_queries * k:
        raise DomainError(f"n={n} too small for {n_queries} queries x {k} neighbors")
    alpha_max = angle_from_distance(radius, kind)
    rng = rng_for(seed, 51)
    Q = sample_unit_vectors(dim, n_queries, derive(seed, 52))
    planted = np.empty((n_queries * k, dim))
    for qi in range(n_queries):
        W = rng.standard_normal((k, dim))
        for _ in range(2):
            W -= (W @ Q[qi])[:, None] * Q[qi]
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        angles = rng.uniform(0.0, alpha_max, size=k)
        planted[qi * k:(qi + 1) * k] = (
            np.cos(angles)[:, None] * Q[qi] + np.sin(angles)[:, None] * W)
    fillers = sample_unit_vectors(dim, n - n_queries * k, derive(seed, 53))
    return np.vstack([planted, fillers]), Q


def brute_force_knn(vectors, queries, k: int, kind: DistanceKind):
    """Exact k-NN by exhaustive scan; ties by ascending row id.

    Returns (ids (nq, k) int64, dists (nq, k) float64).
    """
    from .core import distance_many

    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    nq = queries.shape[0]
    ids = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k))
    for qi in range(nq):
        d = distance_many(queries[qi], vectors, kind)
        order = np.lexsort((np.arange(d.shape[0]), d))[:k]
        ids[qi] = order
        dists[qi] = d[order]
    return ids, dists


def recall_at_k(found_ids, true_ids) -> float:
    """Fraction of the true neighbors present in the returned set."""
    true_ids = list(true_ids)
    if not true_ids:
        return 0.0
    found = set(int(i) for i in found_ids)
    return sum(1 for t in true_ids if int(t) in found) / len(true_ids)


def precision_vs_tables(vectors, queries, family: families.MinhashFamily, r: int,
                        b_max: int, seed: int, k: int = 10,
                        kind: DistanceKind = DistanceKind.ANGULAR,
                        ground_truth=None, backend=None):
    """Mean recall@k as the table count grows from 1 to b_max at fixed r.

    The index is built once with b_max tables; using the first b of them
    gives exactly the index that b tables would build (table t always
    uses global minhash indices [t*r, (t+1)*r)), and candidate sets grow
    monotonically with b.
    """
    if ground_truth is None:
        true_ids, _ = brute_force_knn(vectors, queries, k, kind)
    else:
        true_ids = ground_truth
    idx = index_mod.build_index(vectors, family, amplify.AmplifiedScheme(r, b_max),
                                seed, backend=backend)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    nq = queries.shape[0]
    recalls = np.zeros(b_max + 1)  # recalls[b]; b=0 stays 0 (no tables)
    from .core import distance_many

    for qi in range(nq):
        keys = index_mod._query_keys(idx, queries[qi], backend)
        seen: set[int] = set()
        hits_by_b = []
        for t in range(b_max):
            bucket = idx.tables[t].buckets.get(int(keys[t]))
            if bucket is not None:
                seen.update(bucket.tolist())
            hits_by_b.append(frozenset(seen))
        truth = true_ids[qi]
        for b in range(1, b_max + 1):
            cand = hits_by_b[b - 1]
            if not cand:
                continue
            pos = np.fromiter(cand, dtype=np.int64)
            d = distance_many(queries[qi], idx.vectors[pos], kind)
            order = np.lexsort((idx.ids[pos], d))[:k]
            recalls[b] += recall_at_k(idx.ids[pos][order], truth) / nq
    return np.arange(b_max + 1), recalls


def collision_vs_k(dim: int, cols: int, k_list, trials: int, seed: int,
                   dist: float = 0.5,
                   kind: DistanceKind = DistanceKind.EUCLIDEAN_NORMALIZED,
                   backend=None):
    """Feature-hashing collision rate at one distance as k grows.

    Returns (k array, p_hat array, std_err array). The same pairs are
    reused for every k so the trend is not washed out by pair noise.
    """
    k_list = list(k_list)
    if any(k < 1 for k in k_list) or sorted(k_list) != k_list:
        raise DomainError("k_list must be ascending positive integers")
    alpha = angle_from_distance(dist, kind)
    U, V = sample_pairs_at_angle(dim, alpha, trials, derive(seed, 61))
    p_hat = np.empty(len(k_list))
    std_err = np.empty(len(k_list))
    for i, k in enumerate(k_list):
        family = families.MinhashFamily(families.FeatureHashing(cols, k), dim,
                                        derive(seed, 62, k))
        hu = families.family_hash_batch(family, 0, U, backend)
        hv = families.family_hash_batch(family, 0, V, backend)
        p = float(np.mean(hu == hv))
        p_hat[i] = p
        std_err[i] = math.sqrt(p * (1.0 - p) / trials)
    return np.asarray(k_list), p_hat, std_err


@dataclass(frozen=True)
class OpCountReport:
    family_spec: str
    additions: int
    subtractions: int
    multiplications: int
    comparisons: int
    ns_per_hash: float  # wall clock, informational only


def op_count_benchmark(family_specs, dim: int, trials: int, seed: int = 0,
                       backend=None):
    """Exact per-hash operation counts plus an informational ns/hash."""
    reports = []
    X = sample_unit_vectors(dim, max(trials, 1), derive(seed, 71))
    for spec in family_specs:
        family = families.MinhashFamily(families.parse_family(spec), dim, derive(seed, 72))
        _, counts = opcount.family_hash_counted(family, 0, X[0])
        families.family_hash_batch(family, 0, X[:1], backend)  # warm caches
        t0 = time.perf_counter()
        families.family_hash_batch(family, 0, X, backend)
        ns = (time.perf_counter() - t0) / X.shape[0] * 1e9
        reports.append(OpCountReport(spec, counts.additions, counts.subtractions,
                                     counts.multiplications, counts.comparisons, ns))
    return reports


# --- binary vector formats ------------------------------------------------


def read_fvecs(path) -> np.ndarray:
    """Read an fvecs file: records of [int32 dim][dim float32], little-endian."""
    return _read_vecs(path, np.dtype("<f4"), "fvecs")


def read_bvecs(path) -> np.ndarray:
    """Read a bvecs file: records of [int32 dim][dim uint8], widened to float."""
    return _read_vecs(path, np.dtype("u1"), "bvecs")


def _read_vecs(path, comp_dtype, label) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if not raw:
        return np.empty((0, 0), dtype=np.float64)
    size = len(raw)
    if size < 4:
        raise FormatError(f"truncated {label} record", offset=0)
    dim = struct.unpack_from("<i", raw, 0)[0]
    if dim < 1:
        raise FormatError(f"bad {label} dimension {dim}", offset=0)
    rec = 4 + dim * comp_dtype.itemsize
    if size % rec == 0:
        n = size // rec
        mat = np.frombuffer(raw, dtype=np.uint8).reshape(n, rec)
        dims = mat[:, :4].copy().view("<i4")[:, 0]
        bad = np.nonzero(dims != dim)[0]
        if bad.size:
            raise FormatError(f"inconsistent {label} dimension {dims[bad[0]]} != {dim}",
                              offset=int(bad[0]) * rec)
        comps = mat[:, 4:].copy().view(comp_dtype)
        return comps.astype(np.float64)
    # size does not tile: scan records to locate the fault
    off = 0
    while off < size:
        if size - off < 4:
            raise FormatError(f"truncated {label} record", offset=off)
        d = struct.unpack_from("<i", raw, off)[0]
        if d != dim:
            raise FormatError(f"inconsistent {label} dimension {d} != {dim}", offset=off)
        if size - off < rec:
            raise FormatError(f"truncated {label} record", offset=off)
        off += rec
    raise FormatError(f"malformed {label} file", offset=off)  # pragma: no cover


def write_fvecs(path, X) -> None:
    """Write (n, dim) data as fvecs (float32 components)."""
    X = np.atleast_2d(np.asarray(X))
    n, dim = X.shape
    out = np.empty((n, 4 + dim * 4), dtype=np.uint8)
    out[:, :4] = np.frombuffer(struct.pack("<i", dim), dtype=np.uint8)
    out[:, 4:] = X.astype("<f4").view(np.uint8)
    with open(path, "wb") as f:
        f.write(out.tobytes())


def normalize_rows(X) -> np.ndarray:
    """Rows scaled to unit norm (for datasets not on the unit sphere)."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if (norms == 0.0).any():
        raise DomainError("dataset contains a zero vector; cannot normalize")
    return X / norms


# --- ground-truth cache ----------------------------------------------------


def save_ground_truth(path, query_ids, neighbor_ids, dists) -> None:
    """Binary cache: per query, its id, k neighbor ids and k distances."""
    query_ids = np.asarray(query_ids, dtype=np.int64)
    neighbor_ids = np.asarray(neighbor_ids, dtype=np.int64)
    dists = np.asarray(dists, dtype=np.float64)
    nq, k = neighbor_ids.shape
    with open(path, "wb") as f:
        f.write(_GT_MAGIC)
        f.write(struct.pack("<QQ", nq, k))
        for qi in range(nq):
            f.write(struct.pack("<q", query_ids[qi]))
            f.write(neighbor_ids[qi].astype("<i8").tobytes())
            f.write(dists[qi].astype("<f8").tobytes())


def load_ground_truth(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != _GT_MAGIC:
        raise FormatError("not a ground-truth cache", offset=0)
    nq, k = struct.unpack_from("<QQ", raw, 8)
    rec = 8 + 8 * k + 8 * k
    expected = 24 + nq * rec
    if len(raw) != expected:
        raise FormatError("truncated ground-truth cache", offset=min(len(raw), expected))
    query_ids = np.empty(nq, dtype=np.int64)
    neighbor_ids = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k))
    off = 24
    for qi in range(nq):
        query_ids[qi] = struct.unpack_from("<q", raw, off)[0]
        neighbor_ids[qi] = np.frombuffer(raw, dtype="<i8", count=k, offset=off + 8)
        dists[qi] = np.frombuffer(raw, dtype="<f8", count=k, offset=off + 8 + 8 * k)
        off += rec
    return query_ids, neighbor_ids, dists


# --- CSV ---------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    """Plain CSV with deterministic order and 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Returns (header, list of string rows); callers convert types."""
    with open(path, encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows:
        return [], []
    return rows[0], rows[1:]


def write_collision_curve_csv(curve: CollisionCurve, path) -> None:
    write_csv(path, ["distance", "p_hat", "std_err"],
              zip(curve.grid, curve.p_hat, curve.std_err))


def read_collision_curve_csv(path, family_spec="", kind=DistanceKind.EUCLIDEAN_NORMALIZED,
                             trials=0, seed=0) -> CollisionCurve:
    header, rows = read_csv(path)
    if header != ["distance", "p_hat", "std_err"]:
        raise FormatError(f"unexpected collision-curve header {header}")
    cols = np.array([[float(v) for v in row] for row in rows]) if rows else np.empty((0, 3))
    return CollisionCurve(family_spec, kind, cols[:, 0].copy(), cols[:, 1].copy(),
                          cols[:, 2].copy(), trials, seed)


def write_table1_csv(rows, path) -> None:
    write_csv(path, ["family", "r", "b", "total", "p1_hat", "p2_hat",
                     "p1_err", "p2_err", "p1_amp", "p2_amp", "feasible"],
              [(r.family_spec, r.r, r.b, r.total, r.p1_hat, r.p2_hat,
                r.p1_err, r.p2_err, r.p1_amp, r.p2_amp, r.feasible) for r in rows])


def write_opcounts_csv(reports, path) -> None:
    write_csv(path, ["family", "additions", "subtractions", "multiplications",
                     "comparisons", "ns_per_hash"],
              [(r.family_spec, r.additions, r.subtractions, r.multiplications,
                r.comparisons, r.ns_per_hash) for r in reports])
