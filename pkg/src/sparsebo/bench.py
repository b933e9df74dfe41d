"""Timing harnesses: full vs sparse GP, and compiled vs numpy core."""
from __future__ import annotations

import statistics
import time
from typing import Callable, Sequence

import numpy as np

from . import _core_py
from .gp_full import fit_full, predict_full
from .gp_sparse import fit_sparse, predict_sparse
from .kernels import KernelParams


def median_time(fn: Callable[[], object], repeats: int = 5) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def gp_problem(n: int, d: int = 6, n_test: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = np.sin(3.0 * X).sum(axis=1) + 0.05 * rng.standard_normal(n)
    Xs = rng.random((n_test, d))
    return X, y, Xs


def time_full(X, y, Xs, params: KernelParams, noise: float, repeats: int = 5) -> float:
    return median_time(lambda: predict_full(fit_full(X, y, params, noise), Xs), repeats)


def time_sparse(X, y, Xs, m: int, params: KernelParams, noise: float, repeats: int = 5) -> float:
    Z = X[:m]  # inducing choice is not part of the timed fit
    return median_time(lambda: predict_sparse(fit_sparse(X, y, Z, params, noise), Xs), repeats)


def bench_gp(ns: Sequence[int], ms: Sequence[int], d: int = 6, repeats: int = 5,
             skip_full_above: int | None = None) -> list[dict]:
    params = KernelParams(1.0, 0.5)
    noise = 1e-2
    rows = []
    for n in ns:
        X, y, Xs = gp_problem(n, d)
        full = None
        if skip_full_above is None or n <= skip_full_above:
            full = time_full(X, y, Xs, params, noise, repeats)
        for m in ms:
            sparse = time_sparse(X, y, Xs, min(m, n), params, noise, repeats)
            rows.append({
                "n": n, "m": m, "full_s": full, "sparse_s": sparse,
                "speedup": (full / sparse) if full else None,
            })
    return rows


def bench_core(sizes: Sequence[int] = (500, 2000), d: int = 8, repeats: int = 5) -> list[dict]:
    """Time each core routine under both backends."""
    try:
        from . import _core
    except ImportError:
        _core = None
    backends = [("python", _core_py)] + ([("cython", _core)] if _core is not None else [])
    rows = []
    rng = np.random.default_rng(0)
    for n in sizes:
        A = rng.random((n, d))
        B = rng.random((64, d))
        F = rng.random((n, 2))
        P = F[np.lexsort((F[:, 1], F[:, 0]))]
        cases = {
            "matern32_cross n x n": lambda mod: mod.matern32_cross(A, A, 1.0, 0.5),
            "matern32_cross n x 64": lambda mod: mod.matern32_cross(A, B, 1.0, 0.5),
            "nondominated_mask": lambda mod: mod.nondominated_mask(F),
            "hypervolume_2d": lambda mod: mod.hypervolume_2d(P, 1.1, 1.1),
        }
        for name, fn in cases.items():
            row = {"routine": name, "n": n}
            for label, mod in backends:
                row[f"{label}_s"] = median_time(lambda: fn(mod), repeats)
            if "cython_s" in row:
                row["speedup"] = row["python_s"] / row["cython_s"]
            rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        for c in r:
            if c not in cols:
                cols.append(c)

    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    cells = [[fmt(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)
