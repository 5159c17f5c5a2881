"""Command line: generate instances, run trials, verify swap contracts, benchmark.

Exit codes: 0 success, 1 failed verification or invariant, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import GapInstance, brute_force_gap, gap_as_sap, solve_sap
from .instances import (CoverageInstance, dump_instance, load_instance, random_coverage,
                        random_gap, random_welfare)
from .matroid import count_bases_upper
from .oracle import MAX_BASES, brute_force_optimum, verify_reduced_swap, verify_swap_condition
from .partition_swaps import GeneralizedSwapF, PartitionSwapF, build_reduced_instance
from .poisson import run_streams
from .preprocess import residual_random_greedy, solve_with_preprocessing

ALGORITHMS = ("gsp-F", "gsp-bandit", "gsp-genF", "gsp-genf", "sap", "rrg", "greedy-baseline")
COLUMNS = ("seed", "value", "swap_events", "value_queries", "extension_queries", "wall_time",
           "se", "threshold", "guarantee")
E_FACTOR = 1.0 - 1.0 / math.e


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    algo: str
    instance: dict
    epsilon: float = 0.1
    delta: float = 0.1
    trials: int = 1
    seed: int = 0
    force: bool = False
    pack: str = "exact_small"
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if self.algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algo!r}")
        is_gap = "bins" in self.instance
        if (self.algo == "sap") != is_gap:
            raise UsageError("algorithm 'sap' needs a GAP instance and the others a coverage one")


def greedy_baseline(f, matroid) -> frozenset:
    """Classic greedy: add the feasible element with the largest marginal gain."""
    S = frozenset()
    f(S)
    while len(S) < matroid.rank:
        best, best_value = None, -math.inf
        for e in matroid.ground:
            if e not in S and matroid.is_independent(S | {e}):
                v = f(S | {e})
                if v > best_value:
                    best, best_value = e, v
        S = S | {best}
    return S


def run_trial(config: ExperimentConfig, trial: int) -> dict:
    seed = config.seed + trial
    started = time.perf_counter()
    if config.algo == "sap":
        gap = GapInstance.from_json(config.instance)
        result = solve_sap(gap_as_sap(gap, config.pack, config.epsilon), config.epsilon, seed)
        row = {"seed": seed, "value": result.value, "swap_events": result.report.swap_events,
               "value_queries": 0, "extension_queries": 0}
    else:
        inst = CoverageInstance.from_json(config.instance)
        f, matroid = inst.oracle(), inst.matroid()
        if config.algo in ("rrg", "greedy-baseline"):
            if config.algo == "rrg":
                rng = run_streams(seed)[0]
                S = residual_random_greedy(f, matroid, config.delta, rng).final
            else:
                S = greedy_baseline(f, matroid)
            row = {"seed": seed, "value": f.value(S), "swap_events": 0,
                   "value_queries": f.queries, "extension_queries": 0}
        else:
            if config.algo == "gsp-F" and not matroid.is_simple:
                raise UsageError("gsp-F needs bounds of 1; use gsp-genF")
            if config.algo == "gsp-bandit" and not matroid.is_simple:
                raise UsageError("gsp-bandit needs bounds of 1; use gsp-genf")
            kind = "F" if config.algo in ("gsp-F", "gsp-genF") else "f"
            reduced = config.algo in ("gsp-genF", "gsp-genf")
            try:
                report = solve_with_preprocessing(f, matroid, config.epsilon, kind, seed,
                                                  force=config.force, use_reduced=reduced)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            row = {"seed": seed, "value": report.final_value, "swap_events": report.swap_events,
                   "value_queries": report.value_queries,
                   "extension_queries": report.extension_queries}
    row["wall_time"] = round(time.perf_counter() - started, 6) if config.timing else 0.0
    return row


def guarantee(config: ExperimentConfig) -> tuple[float | None, str]:
    """Threshold the mean is tested against, or None when no optimum is computable."""
    eps = config.epsilon
    if config.algo == "greedy-baseline":
        return None, "none (baseline)"
    if config.algo == "sap":
        gap = GapInstance.from_json(config.instance)
        if (gap.m + 1) ** gap.n > MAX_BASES:
            return None, "optimum not enumerable"
        opt = brute_force_gap(gap)[0]
        ratio = 1.0 if config.pack == "exact_small" else 1.0 - eps
        return (1 - eps) * (1 - math.exp(-ratio)) * opt, "(1-eps)(1-exp(-alpha)) OPT"
    inst = CoverageInstance.from_json(config.instance)
    matroid = inst.matroid()
    if count_bases_upper(matroid) > MAX_BASES:
        return None, "optimum not enumerable"
    opt = brute_force_optimum(inst.oracle(), matroid).opt_value
    if config.algo in ("gsp-F", "gsp-genF"):
        return (1 - eps) * E_FACTOR * opt, "(1-eps)(1-1/e) OPT"
    if config.algo in ("gsp-bandit", "gsp-genf"):
        return (E_FACTOR - eps) * opt, "(1-1/e-eps) OPT"
    return opt / 4, "OPT/4"


def _trial_worker(args):
    config, trial = args
    return run_trial(config, trial)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> tuple[list[dict], dict]:
    jobs = [(config, i) for i in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial_worker, jobs))
    else:
        rows = [_trial_worker(j) for j in jobs]
    values = np.array([r["value"] for r in rows])
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    threshold, label = guarantee(config)
    summary = {"seed": "summary", "value": float(values.mean()),
               "swap_events": float(np.mean([r["swap_events"] for r in rows])),
               "value_queries": float(np.mean([r["value_queries"] for r in rows])),
               "extension_queries": float(np.mean([r["extension_queries"] for r in rows])),
               "wall_time": float(np.sum([r["wall_time"] for r in rows])),
               "se": se, "threshold": "" if threshold is None else threshold, "guarantee": label}
    return rows, summary


def write_csv(rows: list[dict], summary: dict | None, out) -> None:
    writer = csv.DictWriter(out, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({**r, "se": "", "threshold": "", "guarantee": ""})
    if summary is not None:
        writer.writerow(summary)


def _open_out(path: str | None):
    return open(path, "w", newline="") if path else io.StringIO()


def cmd_generate(args) -> int:
    if args.kind == "coverage":
        inst = random_coverage(args.n, args.k, args.seed, items=args.items, bound=args.bound)
    elif args.kind == "welfare":
        inst = random_welfare(args.players, args.items or 3, args.seed)
    else:
        inst = random_gap(args.bins, args.n, args.seed)
    if args.out:
        dump_instance(inst, args.out)
    else:
        print(json.dumps(inst.to_json(), indent=1, sort_keys=True))
    return 0


def _config(args, algo) -> ExperimentConfig:
    try:
        data = json.loads(Path(args.instance).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance: {exc}") from exc
    return ExperimentConfig(algo, data, args.epsilon, args.delta, args.trials, args.seed,
                            args.force, args.pack, not args.no_timing)


def cmd_solve(args) -> int:
    config = _config(args, args.algo)
    rows, summary = run_experiment(config, args.workers)
    out = _open_out(args.out)
    write_csv(rows, summary, out)
    if not args.out:
        sys.stdout.write(out.getvalue())
    else:
        out.close()
    return 0


def cmd_bench(args) -> int:
    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["algo", "mean", "se", "threshold", "mean_value_queries",
                     "mean_extension_queries", "total_wall_time"])
    for algo in args.algos.split(","):
        config = _config(args, algo.strip())
        _, s = run_experiment(config, args.workers)
        writer.writerow([config.algo, s["value"], s["se"], s["threshold"], s["value_queries"],
                         s["extension_queries"], s["wall_time"]])
    if not args.out:
        sys.stdout.write(out.getvalue())
    else:
        out.close()
    return 0


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    if isinstance(inst, GapInstance):
        raise UsageError("verify works on coverage instances")
    f, matroid = inst.oracle(), inst.matroid()
    grid = [float(x) for x in args.t_grid.split(",")]
    if args.algo == "gsp-F":
        if not matroid.is_simple:
            raise UsageError("gsp-F needs bounds of 1")
        report = verify_swap_condition(PartitionSwapF(f, matroid), f, matroid, t_grid=grid)
    elif args.algo == "gsp-genF":
        reduced = build_reduced_instance(f, matroid)
        report = verify_reduced_swap(GeneralizedSwapF(reduced, args.delta), reduced, grid,
                                     args.trials, np.random.default_rng(args.seed))
    else:
        raise UsageError("verify supports gsp-F (exact) and gsp-genF (Monte Carlo)")
    print(json.dumps(report.to_json(), indent=1))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gspoisson", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--kind", choices=("coverage", "welfare", "gap"), required=True)
    g.add_argument("--n", type=int, default=12, help="elements (coverage) or items (gap)")
    g.add_argument("--k", type=int, default=3, help="parts (coverage)")
    g.add_argument("--bound", type=int, default=1, help="per-part bound (coverage)")
    g.add_argument("--items", type=int, default=None, help="item universe / welfare items")
    g.add_argument("--players", type=int, default=2)
    g.add_argument("--bins", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    def common(p):
        p.add_argument("--instance", required=True)
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--force", action="store_true", help="allow parameters outside the proven range")
        p.add_argument("--pack", choices=("exact_small", "fptas"), default="exact_small")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-timing", action="store_true", help="write wall_time as 0")

    s = sub.add_parser("solve", help="run trials of one algorithm and write CSV")
    common(s)
    s.add_argument("--algo", choices=ALGORITHMS, required=True)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="summary rows for several algorithms")
    common(b)
    b.add_argument("--algos", default="gsp-F,rrg,greedy-baseline")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check a swap contract on every base")
    common(v)
    v.add_argument("--algo", choices=("gsp-F", "gsp-genF"), default="gsp-F")
    v.add_argument("--t-grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except AssertionError:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
