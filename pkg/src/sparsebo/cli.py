"""Command-line entry point.

    sparsebo run --config FILE [--seed N] [--out DIR]
    sparsebo sample --config FILE -n N [--seed N] [--out FILE]
    sparsebo metrics --history CSV [--observations CSV] [--linear-edp]
    sparsebo bench-gp --n 1000,2000 --m 32,64
    sparsebo bench-core

Exit codes: 0 success, 2 config error, 3 evaluator failure abort.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .bench import bench_core, bench_gp, format_table
from .config import parse_config, with_overrides
from .engine import RunAborted, final_top1, run
from .errors import ConfigError, SparseBOError, ValidationError
from .pareto import dominated_hypervolume, pareto_filter, pareto_optimal_region, top1_distance
from .search_space import lhs_sample, write_samples_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVAL = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    if args.iterations is not None:
        cfg = with_overrides(cfg, iterations=args.iterations)
    result = run(cfg.space, cfg.evaluators, cfg.optimizer)
    result.meta["config_hash"] = cfg.config_hash
    result.meta["config_path"] = str(args.config)
    out = Path(args.out)
    result.write(out)
    top = final_top1(result)
    best_c, best_f = result.archive.entries[top["index"]]
    print(f"front size {len(result.archive)} after {len(result.history)} iterations, "
          f"{result.meta['evaluator_calls']} evaluator calls")
    print(f"top-1: {dict(zip(cfg.space.names, best_c.values))} objectives {list(best_f)} "
          f"distance {top['distance']:.6g}")
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = parse_config(args.config)
    seed = cfg.optimizer.seed if args.seed is None else args.seed
    cands = lhs_sample(cfg.space, args.n, seed)
    if args.out:
        write_samples_csv(cfg.space, cands, args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(cfg.space.names)
        for c in cands:
            w.writerow(c.values)
    return EXIT_OK


def _read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def compute_metrics(F: np.ndarray) -> dict:
    """Front metrics over points ``F`` (n x 2, minimized), min-max scaled over all of them."""
    lo = F.min(axis=0)
    hi = F.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    archive = pareto_filter([(i, f) for i, f in enumerate(F)])
    Z = (archive.objectives - lo) / (hi - lo)
    idx, dist = top1_distance(archive, normalization=np.column_stack([lo, hi]))
    return {
        "n_points": int(F.shape[0]),
        "pareto_count": len(archive),
        "dominated_hv": dominated_hypervolume(Z, (1.1, 1.1)),
        "pareto_region": pareto_optimal_region(Z, np.zeros(2)),
        "top1": {"row": int(archive.entries[idx][0]), "objectives": F[archive.entries[idx][0]].tolist(),
                 "distance": dist},
        "normalization": np.column_stack([lo, hi]).tolist(),
    }


def cmd_metrics(args) -> int:
    hist = _read_rows(args.history)
    obs_path = args.observations
    if obs_path is None:
        sibling = Path(args.history).with_name("observations.csv")
        obs_path = sibling if sibling.exists() else None
    if obs_path is not None:
        rows = _read_rows(obs_path)
        F = np.array([[float(r["error"]), float(r["objective_edp"])] for r in rows])
    else:
        tf = (lambda v: v) if args.linear_edp else math.log
        F = np.array([[float(r["y_error"]), tf(float(r["y_edp"]))] for r in hist])
    if F.size == 0:
        raise ValidationError("no objective rows to compute metrics from")
    out = compute_metrics(F)
    if hist and "dominated_hv" in hist[0]:
        hv = [float(r["dominated_hv"]) for r in hist]
        out["history_hv_nondecreasing"] = all(b >= a for a, b in zip(hv, hv[1:]))
        out["history_iterations"] = len(hist)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_bench_gp(args) -> int:
    rows = bench_gp(args.n, args.m, d=args.d, repeats=args.repeats)
    print(format_table(rows))
    return EXIT_OK


def cmd_bench_core(args) -> int:
    print(format_table(bench_core(args.sizes, repeats=args.repeats)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsebo", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the optimizer")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--iterations", type=int)
    r.add_argument("--out", default="out")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sample", help="dump an LHS design as CSV")
    s.add_argument("--config", required=True)
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    m = sub.add_parser("metrics", help="recompute front metrics from a run's CSVs")
    m.add_argument("--history", required=True)
    m.add_argument("--observations")
    m.add_argument("--linear-edp", action="store_true", help="history EDP is not log-scaled")
    m.set_defaults(func=cmd_metrics)

    b = sub.add_parser("bench-gp", help="full vs sparse GP timing table")
    b.add_argument("--n", type=_int_list, default=[1000, 2000, 4000])
    b.add_argument("--m", type=_int_list, default=[64])
    b.add_argument("--d", type=int, default=6)
    b.add_argument("--repeats", type=int, default=5)
    b.set_defaults(func=cmd_bench_gp)

    c = sub.add_parser("bench-core", help="compiled vs numpy core timing table")
    c.add_argument("--sizes", type=_int_list, default=[500, 2000])
    c.add_argument("--repeats", type=int, default=5)
    c.set_defaults(func=cmd_bench_core)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except (SparseBOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
