"""Full vs sparse GP fit+predict timing, median of repeated runs.

    python benchmarks/bench_gp.py [--n 1000,2000,3000,4000] [--m 32,64]
"""
import argparse

from sparsebo.bench import bench_gp, format_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="1000,2000,3000,4000")
    ap.add_argument("--m", default="32,64")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    ns = [int(x) for x in args.n.split(",")]
    ms = [int(x) for x in args.m.split(",")]
    print(format_table(bench_gp(ns, ms, repeats=args.repeats)))


if __name__ == "__main__":
    main()
