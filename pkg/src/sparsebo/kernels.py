"""Matérn-3/2 kernel and covariance assembly.

    k(r) = variance * (1 + sqrt(3) r / l) * exp(-sqrt(3) r / l)

Only the nu = 3/2 closed form is provided; the general-nu Bessel form is not.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, LinAlgError
from scipy.spatial.distance import pdist

from ._backend import core
from .errors import DegenerateDataError, DomainError, NumericalError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

SMOOTHNESS = 1.5
JITTER_START = 1e-8
JITTER_MAX = 1e-4
# a pivot below this (relative to the variance) is treated as a failed factorization
_PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelParams:
    variance: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValidationError(f"kernel variance must be > 0, got {self.variance}")
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValidationError(f"kernel lengthscale must be > 0, got {self.lengthscale}")

    @property
    def smoothness(self) -> float:
        return SMOOTHNESS


def matern32(r: float, p: KernelParams) -> float:
    if r < 0:
        raise DomainError(f"distance must be >= 0, got {r}")
    s = math.sqrt(3.0) * r / p.lengthscale
    return p.variance * (1.0 + s) * math.exp(-s)


def _as_points(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise ShapeError(f"points must be a 2-D array, got shape {A.shape}")
    return np.ascontiguousarray(A)


def cov_matrix(A, B=None, p: KernelParams = KernelParams(), noise: float | None = None) -> np.ndarray:
    """Covariance between point sets ``A`` (n x d) and ``B`` (m x d).

    ``B=None`` means ``B = A``. ``noise`` adds ``noise * I`` and is only
    accepted for that square case.
    """
    A = _as_points(A)
    square = B is None
    if square:
        B = A
    else:
        B = _as_points(B)
        if B is A:
            square = True
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    K = core.matern32_cross(A, B, float(p.variance), float(p.lengthscale))
    if square:
        # the compiled and numpy paths are each symmetric; enforce it regardless
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, p.variance)
    if noise:
        if not square:
            raise ShapeError("noise can only be added to a square covariance of one point set")
        if noise < 0:
            raise DomainError(f"noise must be >= 0, got {noise}")
        K[np.diag_indices_from(K)] += noise
    return K


def prior_variance(X, p: KernelParams) -> np.ndarray:
    """diag k(x, x), constant for a stationary kernel."""
    return np.full(_as_points(X).shape[0], p.variance)


def lengthscale_heuristic(X) -> float:
    """Median pairwise Euclidean distance."""
    X = _as_points(X)
    if X.shape[0] < 2:
        raise DegenerateDataError("need at least two points for the median heuristic")
    dist = pdist(X)
    positive = dist[dist > 0]
    if positive.size == 0:
        raise DegenerateDataError("all points are identical")
    med = float(np.median(dist))
    if med <= 0:
        med = float(np.median(positive))
    return med


def jittered_cholesky(K: np.ndarray, scale: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K``, adding ``jitter * I`` if needed.

    Jitter starts at 1e-8 * scale and grows x10 up to 1e-4 * scale. Returns
    ``(L, jitter)``; jitter is 0.0 when none was needed.
    """
    n = K.shape[0]
    jitter = 0.0
    next_jitter = JITTER_START * scale
    while True:
        try:
            Kj = K if jitter == 0.0 else K + jitter * np.eye(n)
            L = cholesky(Kj, lower=True, check_finite=False)
            if np.all(np.isfinite(L)) and np.min(np.diag(L)) ** 2 > _PIVOT_FLOOR * scale:
                if jitter:
                    logger.debug("cholesky needed jitter %.3g", jitter)
                return L, jitter
        except LinAlgError:
            pass
        if next_jitter > JITTER_MAX * scale * (1 + 1e-9):
            raise NumericalError(
                f"matrix not positive definite after jitter {jitter:.3g} (max {JITTER_MAX * scale:.3g})"
            )
        jitter = next_jitter
        next_jitter *= 10.0
