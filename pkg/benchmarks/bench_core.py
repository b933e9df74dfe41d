"""Compiled core vs numpy fallback, routine by routine.

    python benchmarks/bench_core.py [--sizes 500,2000] [--repeats 5]
"""
import argparse

from sparsebo._backend import BACKEND
from sparsebo.bench import bench_core, format_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="500,2000")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"active backend: {BACKEND}")
    print(format_table(bench_core(sizes, repeats=args.repeats)))


if __name__ == "__main__":
    main()
