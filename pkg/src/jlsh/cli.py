"""Command-line front end.

Exit codes: 0 success, 1 usage error (message on stderr), 2 data or
format error. Flag values override config-file values override
defaults; the config file is plain ``key = value`` lines whose keys
mirror the long flag names. All randomness flows from --seed: commands
that sample refuse to run without it (gen-data may pass --random
instead).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, amplify, bench, families, harness, index as index_mod
from ._backend import active_backend
from ._mix import derive
from .core import (DistanceKind, DomainError, JlshError, UsageError,
                   sample_unit_vectors)

_KINDS = {k.value: k for k in DistanceKind}


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def _add_common(p: _Parser) -> None:
    p.add_argument("--seed", type=int, help="64-bit seed; all randomness flows from it")
    p.add_argument("--out", help="output path (file or directory, command-specific)")
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--threads", type=int,
                   help="reserved parallelism hint; results never depend on it")


def _build_parser() -> _Parser:
    parser = _Parser(prog="jlsh", description=__doc__)
    parser.add_argument("--version", action="version", version=f"jlsh {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen-data", help="write synthetic unit vectors as fvecs")
    p.add_argument("--n", type=int, default=10_000, help="number of base points")
    p.add_argument("--dim", type=int, default=128, help="dimensionality")
    p.add_argument("--queries", type=int, default=0,
                   help="also write this many query points")
    p.add_argument("--plant-k", type=int, default=10,
                   help="planted near neighbors per query (with --queries)")
    p.add_argument("--plant-dist", type=float, default=0.0,
                   help="plant neighbors within this distance of each query; 0 disables")
    p.add_argument("--kind", default="euclidean-raw", choices=sorted(_KINDS),
                   help="distance kind for --plant-dist")
    p.add_argument("--random", action="store_true",
                   help="draw an entropy seed instead of --seed")
    _add_common(p)

    p = sub.add_parser("collision-curve", help="estimate one family's collision curve")
    p.add_argument("--family", required=False, help="family spec, e.g. fh:T=64,k=1")
    p.add_argument("--dim", type=int, default=128, help="dimensionality")
    p.add_argument("--trials", type=int, default=100_000, help="pairs per grid distance")
    p.add_argument("--kind", default="euclidean-normalized", choices=sorted(_KINDS),
                   help="distance kind of the grid")
    p.add_argument("--grid-points", type=int, default=21, help="grid resolution")
    _add_common(p)

    p = sub.add_parser("solve-params", help="minimal (r, b) for sensitivity targets")
    p.add_argument("--p1", type=float, required=False, help="base collision prob at d1")
    p.add_argument("--p2", type=float, required=False, help="base collision prob at d2")
    p.add_argument("--target-p1", type=float, default=0.95, help="required prob at d1")
    p.add_argument("--target-p2", type=float, default=0.05, help="allowed prob at d2")
    p.add_argument("--r-max", type=int, default=32, help="search bound on r")
    p.add_argument("--b-max", type=int, default=100_000, help="search bound on b")
    _add_common(p)

    p = sub.add_parser("table1", help="per-family (r, b) schemes for the target probs")
    p.add_argument("--families", default=";".join(harness.ExperimentConfig.family_specs),
                   help="comma-separated family specs")
    p.add_argument("--dim", type=int, default=128, help="dimensionality")
    p.add_argument("--d1", type=float, default=0.2, help="near distance")
    p.add_argument("--d2", type=float, default=0.6, help="far distance")
    p.add_argument("--target-p1", type=float, default=0.95, help="required prob at d1")
    p.add_argument("--target-p2", type=float, default=0.05, help="allowed prob at d2")
    p.add_argument("--kind", default="euclidean-raw", choices=sorted(_KINDS),
                   help="distance kind of d1/d2")
    p.add_argument("--trials", type=int, default=30_000, help="pairs per estimate")
    _add_common(p)

    p = sub.add_parser("build-index", help="build and save a multi-table index")
    p.add_argument("--data", required=False, help="fvecs/bvecs file of base points")
    p.add_argument("--family", required=False, help="family spec")
    p.add_argument("--r", type=int, required=False, help="hash functions per table")
    p.add_argument("--b", type=int, required=False, help="hash tables")
    p.add_argument("--no-normalize", action="store_true",
                   help="keep raw vectors instead of projecting to the unit sphere")
    _add_common(p)

    p = sub.add_parser("query", help="k-NN queries against a saved index")
    p.add_argument("--index", required=False, help="index snapshot path")
    p.add_argument("--vector-file", required=False, help="fvecs/bvecs file of query points")
    p.add_argument("--k", type=int, default=10, help="neighbors per query")
    p.add_argument("--kind", default="angular", choices=sorted(_KINDS),
                   help="distance kind for verification")
    p.add_argument("--no-normalize", action="store_true",
                   help="keep raw query vectors")
    _add_common(p)

    p = sub.add_parser("precision-curve", help="recall@k as the table count grows")
    p.add_argument("--data", required=False, help="fvecs/bvecs file of base points")
    p.add_argument("--queries", required=False, help="fvecs/bvecs file of query points")
    p.add_argument("--family", required=False, help="family spec")
    p.add_argument("--r", type=int, default=2, help="hash functions per table")
    p.add_argument("--b-max", type=int, default=20, help="largest table count")
    p.add_argument("--k", type=int, default=10, help="neighbors per query")
    p.add_argument("--kind", default="angular", choices=sorted(_KINDS),
                   help="distance kind for verification")
    p.add_argument("--ground-truth", help="binary ground-truth cache (created if absent)")
    p.add_argument("--no-normalize", action="store_true",
                   help="keep raw vectors")
    _add_common(p)

    p = sub.add_parser("k-sweep", help="feature-hashing collision rate as k grows")
    p.add_argument("--dim", type=int, default=128, help="dimensionality")
    p.add_argument("--cols", type=int, default=64, help="projection output dim")
    p.add_argument("--k-list", default="1,2,4,8,16,32,64",
                   help="comma-separated ascending k values")
    p.add_argument("--dist", type=float, default=0.5, help="fixed pair distance")
    p.add_argument("--kind", default="euclidean-normalized", choices=sorted(_KINDS),
                   help="distance kind of --dist")
    p.add_argument("--trials", type=int, default=100_000, help="pairs per k")
    _add_common(p)

    p = sub.add_parser("bench", help="operation counts and kernel-lane timings")
    p.add_argument("--families", default=";".join(harness.ExperimentConfig.family_specs),
                   help="comma-separated family specs")
    p.add_argument("--dim", type=int, default=128, help="dimensionality")
    p.add_argument("--trials", type=int, default=20_000, help="points per timing run")
    _add_common(p)

    p = sub.add_parser("inspect-index", help="print a snapshot's header and occupancy")
    p.add_argument("--index", required=False, help="index snapshot path")
    _add_common(p)

    return parser


def _load_config(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as f:
            for ln, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, val = line.partition("=")
                if not sep:
                    raise UsageError(f"{path}:{ln}: expected 'key = value'")
                values[key.strip()] = val.strip()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    return values


def _merge_config(parser_cmd: _Parser, args: argparse.Namespace, argv_cmd: list) -> None:
    """Fill flags absent on the command line from the config file."""
    if not getattr(args, "config", None):
        return
    values = _load_config(args.config)
    actions = {a.dest: a for a in parser_cmd._actions}
    explicit = set()
    for token in argv_cmd:
        if token.startswith("--"):
            explicit.add(token.split("=", 1)[0][2:].replace("-", "_"))
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"unknown config key {key!r}")
        if dest in explicit:
            continue
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            setattr(args, dest, raw.lower() in ("1", "true", "yes"))
        else:
            caster = action.type or str
            try:
                setattr(args, dest, caster(raw))
            except ValueError:
                raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
        if action.choices and getattr(args, dest) not in action.choices:
            raise UsageError(f"config key {key!r}: must be one of {sorted(action.choices)}")


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise UsageError(f"--{name} is required")


def _require_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        raise UsageError("--seed is required (experiments must be reproducible)")
    return args.seed


def _emit(text: str, out_path) -> None:
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)


def _parse_kind(name: str) -> DistanceKind:
    return _KINDS[name]


def _family_spec(text: str) -> families.FamilyKind:
    try:
        return families.parse_family(text)
    except DomainError as e:
        raise UsageError(str(e)) from None


def _read_vectors(path: str) -> np.ndarray:
    """Load a dataset file; .bvecs reads bytes, anything else fvecs."""
    if path.endswith(".bvecs"):
        return harness.read_bvecs(path)
    return harness.read_fvecs(path)


def _split_specs(text: str) -> list:
    """Split a family list; ';' separates, or commas when unambiguous.

    Specs themselves contain commas (fh:T=64,k=1), so on comma-splitting
    a chunk continues the previous spec when it looks like 'key=value'
    and names no family.
    """
    if ";" in text:
        specs = [s.strip() for s in text.split(";") if s.strip()]
    else:
        specs = []
        for chunk in (c.strip() for c in text.split(",") if c.strip()):
            name = chunk.partition(":")[0].partition("=")[0].strip().lower()
            starts_new = ":" in chunk or "=" not in chunk or name in families._PARSE
            if starts_new or not specs:
                specs.append(chunk)
            else:
                specs[-1] += "," + chunk
    for s in specs:
        _family_spec(s)
    return specs


def _cmd_gen_data(args) -> int:
    if args.random:
        seed = int(np.random.SeedSequence().entropy % (2**64))
        print(f"entropy seed: {seed}")
    else:
        seed = _require_seed(args)
    _require(args, "out")
    os.makedirs(args.out, exist_ok=True)
    kind = _parse_kind(args.kind)
    if args.queries > 0 and args.plant_dist > 0.0:
        V, Q = harness.make_planted_dataset(args.n, args.dim, args.queries,
                                            args.plant_k, args.plant_dist, kind, seed)
    else:
        V = sample_unit_vectors(args.dim, args.n, derive(seed, 1))
        Q = (sample_unit_vectors(args.dim, args.queries, derive(seed, 2))
             if args.queries > 0 else None)
    base = os.path.join(args.out, "base.fvecs")
    harness.write_fvecs(base, V)
    print(f"wrote {args.n} x {args.dim} -> {base}")
    if Q is not None:
        qpath = os.path.join(args.out, "queries.fvecs")
        harness.write_fvecs(qpath, Q)
        print(f"wrote {args.queries} queries -> {qpath}")
    return 0


def _cmd_collision_curve(args) -> int:
    _require(args, "family", "out")
    seed = _require_seed(args)
    kind = _parse_kind(args.kind)
    family = families.MinhashFamily(_family_spec(args.family), args.dim, seed)
    grid = harness.default_grid(kind, args.grid_points)
    curve = harness.estimate_collision_curve(family, grid, args.trials, seed, kind)
    harness.write_collision_curve_csv(curve, args.out)
    if kind is DistanceKind.EUCLIDEAN_NORMALIZED:
        dev = amplify.neutral_deviation(curve.grid, curve.p_hat)
        side = "above (fewer false negatives)" if dev > 0 else "below (fewer false positives)"
        print(f"neutral-line deviation: {dev:+.4f} ({side})")
    print(f"wrote {len(curve.grid)} grid points -> {args.out}")
    return 0


def _cmd_solve_params(args) -> int:
    _require(args, "p1", "p2")
    target = amplify.SensitivityTarget(0.0, 1.0, args.target_p1, args.target_p2)
    scheme = amplify.solve_parameters(args.p1, args.p2, target,
                                      r_max=args.r_max, b_max=args.b_max)
    p1a = amplify.amplified_probability(args.p1, scheme.r, scheme.b)
    p2a = amplify.amplified_probability(args.p2, scheme.r, scheme.b)
    _emit(f"r={scheme.r} b={scheme.b} total={scheme.total} "
          f"p1_amp={p1a:.6f} p2_amp={p2a:.6f}\n", args.out)
    return 0


def _cmd_table1(args) -> int:
    _require(args, "out")
    seed = _require_seed(args)
    config = harness.ExperimentConfig(
        dim=args.dim, family_specs=tuple(_split_specs(args.families)),
        d1=args.d1, d2=args.d2, p1_min=args.target_p1, p2_max=args.target_p2,
        kind=_parse_kind(args.kind), trials=args.trials, seed=seed)
    rows = harness.table1_experiment(config)
    harness.write_table1_csv(rows, args.out)
    for row in rows:
        status = f"r={row.r} b={row.b} total={row.total}" if row.feasible else "infeasible"
        print(f"{row.family_spec}: p1={row.p1_hat:.4f} p2={row.p2_hat:.4f} {status}")
    print(f"wrote {args.out}")
    return 0


def _cmd_build_index(args) -> int:
    _require(args, "data", "family", "r", "b", "out")
    seed = _require_seed(args)
    V = _read_vectors(args.data)
    if not args.no_normalize:
        V = harness.normalize_rows(V)
    family = families.MinhashFamily(_family_spec(args.family), V.shape[1], seed)
    idx = index_mod.build_index(V, family, amplify.AmplifiedScheme(args.r, args.b),
                                derive(seed, 3))
    index_mod.save_index(idx, args.out)
    print(f"indexed {len(idx)} points ({family.descriptor()}, r={args.r}, b={args.b}) "
          f"-> {args.out}")
    return 0


def _cmd_query(args) -> int:
    _require(args, "index", "vector-file")
    idx = index_mod.load_index(args.index)
    Q = _read_vectors(args.vector_file)
    if not args.no_normalize:
        Q = harness.normalize_rows(Q)
    kind = _parse_kind(args.kind)
    lines = ["query_row,id,distance"]
    for qi in range(Q.shape[0]):
        results, _ = index_mod.query_knn(idx, Q[qi], args.k, kind)
        for pid, dist in results:
            lines.append(f"{qi},{pid},{dist:.17g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_precision_curve(args) -> int:
    _require(args, "data", "queries", "family", "out")
    seed = _require_seed(args)
    V = _read_vectors(args.data)
    Q = _read_vectors(args.queries)
    if not args.no_normalize:
        V, Q = harness.normalize_rows(V), harness.normalize_rows(Q)
    kind = _parse_kind(args.kind)
    truth = None
    if args.ground_truth and os.path.exists(args.ground_truth):
        _, truth, _ = harness.load_ground_truth(args.ground_truth)
    if truth is None:
        truth, dists = harness.brute_force_knn(V, Q, args.k, kind)
        if args.ground_truth:
            harness.save_ground_truth(args.ground_truth, np.arange(Q.shape[0]), truth, dists)
    family = families.MinhashFamily(_family_spec(args.family), V.shape[1], seed)
    bs, recalls = harness.precision_vs_tables(V, Q, family, args.r, args.b_max,
                                              derive(seed, 4), k=args.k, kind=kind,
                                              ground_truth=truth)
    harness.write_csv(args.out, ["family", "b", "recall"],
                      [(family.descriptor(), int(b), float(rc))
                       for b, rc in zip(bs, recalls)])
    print(f"recall@{args.k} from {recalls[1]:.3f} (b=1) to {recalls[-1]:.3f} "
          f"(b={args.b_max}) -> {args.out}")
    return 0


def _cmd_k_sweep(args) -> int:
    _require(args, "out")
    seed = _require_seed(args)
    try:
        k_list = [int(s) for s in args.k_list.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--k-list must be comma-separated integers, got {args.k_list!r}")
    ks, p_hat, std_err = harness.collision_vs_k(args.dim, args.cols, k_list,
                                                args.trials, seed, dist=args.dist,
                                                kind=_parse_kind(args.kind))
    harness.write_csv(args.out, ["k", "p_hat", "std_err"], zip(ks, p_hat, std_err))
    print(f"wrote {len(ks)} rows -> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    seed = _require_seed(args)
    specs = _split_specs(args.families)
    reports = harness.op_count_benchmark(specs, args.dim, args.trials, seed)
    print(f"active backend: {active_backend()}")
    print("exact operation counts per minhash (d=%d):" % args.dim)
    for r in reports:
        print(f"  {r.family_spec:24s} add={r.additions} sub={r.subtractions} "
              f"mul={r.multiplications} cmp={r.comparisons}  ({r.ns_per_hash:.0f} ns/hash)")
    timings = bench.compare_backends(specs, args.dim, args.trials, seed)
    print("kernel lanes (ns/hash, dense families use BLAS on both):")
    for t in timings:
        print(f"  {t.family_spec:24s} {t.backend:6s} {t.ns_per_hash:10.0f}")
    if args.out:
        harness.write_opcounts_csv(reports, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_inspect_index(args) -> int:
    _require(args, "index")
    idx = index_mod.load_index(args.index)
    lines = [
        f"family: {idx.family.descriptor()}",
        f"input_dim: {idx.family.input_dim}",
        f"family_seed: {idx.family.seed}",
        f"r: {idx.scheme.r}",
        f"b: {idx.scheme.b}",
        f"index_seed: {idx.seed}",
        f"points: {len(idx)}",
    ]
    for t, hist in enumerate(index_mod.occupancy_report(idx)):
        total = sum(hist.values())
        biggest = max(hist) if hist else 0
        lines.append(f"table {t}: {total} buckets, largest {biggest}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "collision-curve": _cmd_collision_curve,
    "solve-params": _cmd_solve_params,
    "table1": _cmd_table1,
    "build-index": _cmd_build_index,
    "query": _cmd_query,
    "precision-curve": _cmd_precision_curve,
    "k-sweep": _cmd_k_sweep,
    "bench": _cmd_bench,
    "inspect-index": _cmd_inspect_index,
}


def run(argv=None) -> int:
    """Entry point; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        sub = next(a for a in parser._actions
                   if isinstance(a, argparse._SubParsersAction))
        _merge_config(sub.choices[args.command], args, argv[1:])
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (JlshError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)


def main() -> None:
    sys.exit(run())
