"""Dominance, Pareto filtering and front-quality metrics.

All objectives are minimized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._backend import core
from .errors import NormalizationError, ReferencePointError, ShapeError, ValidationError


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def _as_objectives(F) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    if F.ndim == 1:
        F = F[None, :]
    if F.ndim != 2:
        raise ShapeError(f"objectives must be n x K, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise ValidationError("objective values must be finite")
    return np.ascontiguousarray(F)


def nondominated_mask(F) -> np.ndarray:
    F = _as_objectives(F)
    if F.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return np.asarray(core.nondominated_mask(F), dtype=bool)


def crowding_distance(F) -> np.ndarray:
    """Sorted-gap crowding measure; boundary points get +inf."""
    F = _as_objectives(F)
    n, K = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(K):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


@dataclass
class ParetoArchive:
    """Mutually non-dominated (candidate, objectives) pairs."""

    entries: list = field(default_factory=list)
    epsilon: float = 0.0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def objectives(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0))
        return np.array([np.asarray(f, dtype=float) for _, f in self.entries])

    @property
    def candidates(self) -> list:
        return [c for c, _ in self.entries]


def pareto_filter(points: Sequence[tuple[Any, Sequence[float]]], epsilon: float = 0.0) -> ParetoArchive:
    """Keep the non-dominated points, then thin them to an ``epsilon`` spacing.

    Thinning walks the front in ascending order of the first objective and
    drops any point closer than ``epsilon`` (min-max normalized over the
    front) to one already kept.
    """
    points = list(points)
    if not points:
        raise ValidationError("pareto_filter needs at least one point")
    if epsilon < 0:
        raise ValidationError("epsilon must be >= 0")
    F = _as_objectives([p[1] for p in points])
    keep = np.flatnonzero(nondominated_mask(F))
    order = sorted(keep.tolist(), key=lambda i: (tuple(F[i]), i))
    if epsilon > 0 and len(order) > 1:
        sub = F[order]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        kept_norm: list[np.ndarray] = []
        thinned = []
        for i in order:
            z = (F[i] - lo) / span
            if all(np.linalg.norm(z - k) >= epsilon for k in kept_norm):
                kept_norm.append(z)
                thinned.append(i)
        order = thinned
    return ParetoArchive([points[i] for i in order], epsilon)


def _front_array(front) -> np.ndarray:
    if isinstance(front, ParetoArchive):
        return front.objectives
    return _as_objectives(front)


def hypervolume_mc(front, ref, *, n_samples: int = 1_000_000, seed: int = 0,
                   lower=None) -> tuple[float, float]:
    """Monte-Carlo dominated hypervolume with its standard error.

    Samples uniformly in the box [lower, ref], where ``lower`` defaults to the
    componentwise minimum of the front.
    """
    P = _front_array(front)
    ref = np.asarray(ref, dtype=float)
    lo = P.min(axis=0) if lower is None else np.asarray(lower, dtype=float)
    box = float(np.prod(ref - lo))
    if box <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 200_000
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        S = lo + rng.random((k, P.shape[1])) * (ref - lo)
        dominated = np.zeros(k, dtype=bool)
        for p in P:
            dominated |= np.all(S >= p, axis=1)
        hits += int(dominated.sum())
        done += k
    frac = hits / n_samples
    return box * frac, box * math.sqrt(frac * (1 - frac) / n_samples)


def dominated_hypervolume(front, ref, *, n_samples: int = 1_000_000, seed: int = 0,
                          return_stderr: bool = False):
    """Volume dominated by ``front`` and bounded above by ``ref``.

    Exact sweep for two objectives; Monte Carlo for three or more.
    """
    P = _front_array(front)
    ref = np.asarray(ref, dtype=float)
    if P.shape[0] == 0:
        return (0.0, 0.0) if return_stderr else 0.0
    if P.shape[1] != ref.shape[0]:
        raise ShapeError(f"front has {P.shape[1]} objectives, reference has {ref.shape[0]}")
    if np.any(P > ref):
        raise ReferencePointError("a front point lies beyond the reference point")
    if P.shape[1] == 1:
        hv, se = float(ref[0] - P[:, 0].min()), 0.0
    elif P.shape[1] == 2:
        order = np.lexsort((P[:, 1], P[:, 0]))
        hv = float(core.hypervolume_2d(np.ascontiguousarray(P[order]), float(ref[0]), float(ref[1])))
        se = 0.0
    else:
        hv, se = hypervolume_mc(P, ref, n_samples=n_samples, seed=seed)
    return (hv, se) if return_stderr else hv


def pareto_optimal_region(front, ideal, **kw) -> float:
    """Volume of the union of boxes [ideal, p] over front points p.

    Computed as the dominated hypervolume of the reflected front.
    """
    P = _front_array(front)
    ideal = np.asarray(ideal, dtype=float)
    if P.shape[0] == 0:
        return 0.0
    if np.any(P < ideal):
        raise ReferencePointError("ideal point does not weakly dominate the front")
    return dominated_hypervolume(-P, -ideal, **kw)


def minmax_normalize(F, ranges) -> np.ndarray:
    F = _as_objectives(F)
    ranges = np.asarray(ranges, dtype=float)
    lo, hi = ranges[:, 0], ranges[:, 1]
    if np.any(~(hi > lo)):
        raise NormalizationError(f"degenerate normalization range {ranges.tolist()}")
    return (F - lo) / (hi - lo)


def top1_distance(front, ref=None, normalization=None) -> tuple[int, float]:
    """Index of the front entry nearest ``ref`` after min-max scaling, and its distance.

    ``normalization`` is one ``(min, max)`` pair per objective; ``ref``
    defaults to the origin of the normalized space.
    """
    P = _front_array(front)
    if P.shape[0] == 0:
        raise ValidationError("top1_distance needs a non-empty front")
    Z = P if normalization is None else minmax_normalize(P, normalization)
    ref = np.zeros(P.shape[1]) if ref is None else np.asarray(ref, dtype=float)
    dist = np.sqrt(np.sum((Z - ref) ** 2, axis=1))
    i = int(np.argmin(dist))
    return i, float(dist[i])
