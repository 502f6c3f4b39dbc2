"""Command line front end: ``ontojoin {gen,dist,join,verify,bench}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace

from . import top_k_pairs
from .bruteforce import METRICS, brute_topk, pair_distance
from .dataset import GenConfig, generate, read_objects, write_dataset
from .ontology import OntologyError, read_ontology

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VERIFY_TOL = 1e-9


@dataclass
class RunReport:
    config: dict
    wall_ms: float
    counters: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def _add_gen_args(p: argparse.ArgumentParser, N=60, T=100, branching=4.0, terms=3.0) -> None:
    p.add_argument("--N", type=int, default=N, help="number of objects")
    p.add_argument("--T", type=int, default=T, help="number of ontology terms")
    p.add_argument("--branching", type=float, default=branching, help="average branching factor")
    p.add_argument("--terms", type=float, default=terms, help="average terms per object")
    p.add_argument("--weight-base", type=float, default=1.0, help="weight of root edges")
    p.add_argument("--seed", type=int, default=0)


def _gen_config(args) -> GenConfig:
    return GenConfig(
        N=args.N,
        T=args.T,
        avg_branching=args.branching,
        avg_terms_per_object=args.terms,
        seed=args.seed,
        weight_base=args.weight_base,
    )


def _load(args):
    tree = read_ontology(args.ontology)
    return tree, read_objects(args.objects, tree, dedup=getattr(args, "dedup", False))


def _write_rows(pairs, objects, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["rank", "object_a", "object_b", "distance"])
    for rank, (key, d) in enumerate(pairs, 1):
        writer.writerow([rank, objects[key.lo].name, objects[key.hi].name, f"{d:.6f}"])


def cmd_gen(args) -> int:
    config = _gen_config(args)
    tree, objects = generate(config)
    paths = write_dataset(tree, objects, config, args.out)
    for name, path in paths.items():
        print(f"{name}\t{path}")
    return EXIT_OK


def cmd_dist(args) -> int:
    tree, objects = _load(args)
    by_name = {o.name: o for o in objects}
    for label in (args.a, args.b):
        if label not in by_name:
            raise OntologyError(f"unknown object {label!r}")
    d = pair_distance(by_name[args.a], by_name[args.b], args.metric, tree)
    print(f"{d:.6f}")
    return EXIT_OK


def cmd_join(args) -> int:
    tree, objects = _load(args)
    if len(objects) < 2:
        raise OntologyError(f"{args.objects}: need at least two objects")
    pairs, counters = top_k_pairs(objects, tree, args.metric, args.k, args.variant)
    _write_rows(pairs, objects, sys.stdout)
    if args.stats:
        parts = [f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}" for k, v in counters.items()]
        print("# stats " + " ".join(parts))
    return EXIT_OK


def _first_divergence(fast, slow) -> str | None:
    if len(fast) != len(slow):
        return f"result sizes differ: {len(fast)} vs {len(slow)}"
    for rank, ((fk, fd), (sk, sd)) in enumerate(zip(fast, slow), 1):
        if abs(fd - sd) > VERIFY_TOL:
            return f"rank {rank}: optimized {fk} {fd:.12f} vs brute force {sk} {sd:.12f}"
    return None


def cmd_verify(args) -> int:
    if args.ontology and args.objects:
        tree, objects = _load(args)
        source = f"{args.ontology} + {args.objects}"
    else:
        tree, objects = generate(_gen_config(args))
        source = f"generated seed={args.seed} N={args.N} T={args.T}"
    fast, _ = top_k_pairs(objects, tree, args.metric, args.k, args.variant)
    slow = brute_topk(objects, args.metric, args.k, tree)
    problem = _first_divergence(fast, slow)
    if problem is None:
        print(f"PASS metric={args.metric} k={args.k} pairs={len(fast)} ({source})")
        return EXIT_OK
    print(f"FAIL metric={args.metric} k={args.k}: {problem} ({source})")
    return EXIT_FAIL


def parse_sweep(spec: str) -> tuple[str, list]:
    """``N=1000,2000`` -> ("N", [1000, 2000])."""
    name, _, values = spec.partition("=")
    name = name.strip()
    fields = {"N": int, "T": int, "k": int, "branching": float, "terms": float}
    if name not in fields or not values:
        raise ValueError(f"bad sweep {spec!r}; expected e.g. N=1000,2000 over {sorted(fields)}")
    return name, [fields[name](v) for v in values.split(",") if v.strip()]


def run_bench(metric: str, base: GenConfig, k: int, variant: str, sweep: tuple[str, list]) -> list[RunReport]:
    name, values = sweep
    reports = []
    for index, value in enumerate(values):
        k_point = value if name == "k" else k
        overrides = {"seed": base.seed + index}
        if name in ("N", "T"):
            overrides[name] = value
        elif name == "branching":
            overrides["avg_branching"] = value
        elif name == "terms":
            overrides["avg_terms_per_object"] = value
        config = replace(base, **overrides)
        tree, objects = generate(config)
        start = time.perf_counter()
        pairs, counters = top_k_pairs(objects, tree, metric, k_point, variant)
        wall = (time.perf_counter() - start) * 1000.0
        echo = asdict(config)
        echo.update(metric=metric, k=k_point, variant=variant if metric == "avg" else "")
        reports.append(RunReport(echo, wall, counters, pairs))
    return reports


BENCH_COLUMNS = [
    "metric", "variant", "N", "T", "avg_branching", "avg_terms_per_object", "k", "seed",
    "wall_ms", "total_pairs", "examined", "exact_evaluations", "eta",
]


def cmd_bench(args) -> int:
    sweep = parse_sweep(args.sweep)
    reports = run_bench(args.metric, _gen_config(args), args.k, args.variant, sweep)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for r in reports:
        c, cfg = r.counters, r.config
        if args.metric == "emd":
            examined, exact = c["pairs_seen"], c["emd_count"]
        elif args.metric == "avg":
            examined, exact = c["pairs_examined"], c["exact_evaluations"]
        else:
            examined = exact = ""
        total = cfg["N"] * (cfg["N"] - 1) // 2
        eta = f"{c['eta']:.6f}" if "eta" in c else ""
        writer.writerow([
            cfg["metric"], cfg["variant"], cfg["N"], cfg["T"], cfg["avg_branching"],
            cfg["avg_terms_per_object"], cfg["k"], cfg["seed"], f"{r.wall_ms:.3f}",
            total, examined, exact, eta,
        ])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ontojoin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic ontology + objects + config sidecar")
    _add_gen_args(p, N=1000, T=10000, branching=8.0, terms=7.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    def files(p, required=True):
        p.add_argument("--ontology", required=required, help="child<TAB>parent<TAB>weight file")
        p.add_argument("--objects", required=required, help="label<TAB>term,term,... file")
        p.add_argument("--dedup", action="store_true", help="drop objects with identical term sets")

    p = sub.add_parser("dist", help="distance between two objects")
    files(p)
    p.add_argument("--metric", choices=METRICS, default="emd")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("join", help="top-k most similar pairs as CSV")
    files(p)
    p.add_argument("--metric", choices=METRICS, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--variant", choices=("next-estimate", "complete"), default="next-estimate")
    p.add_argument("--stats", action="store_true", help="append a counters line")
    p.set_defaults(func=cmd_join)

    p = sub.add_parser("verify", help="compare the optimized join with brute force")
    files(p, required=False)
    _add_gen_args(p)
    p.add_argument("--metric", choices=METRICS, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--variant", choices=("next-estimate", "complete"), default="next-estimate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="timing / pruning sweep over generated data, CSV")
    _add_gen_args(p, N=250, T=2000, branching=4.0, terms=3.0)
    p.add_argument("--metric", choices=METRICS, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--variant", choices=("next-estimate", "complete"), default="next-estimate")
    p.add_argument("--sweep", required=True, help="e.g. N=1000,2000,4000")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "k", 1) < 1:
        parser.error("--k must be >= 1")
    try:
        return args.func(args)
    except (OntologyError, ValueError, OSError) as exc:
        print(f"ontojoin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
