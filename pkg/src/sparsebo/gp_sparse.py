"""Sparse GP with Pareto-anchored inducing points.

The training covariance is replaced by

    Q + Lambda,   Q = K_XZ K_ZZ^-1 K_ZX,
    Lambda = diag(K_XX - Q) + noise * I      (FITC)
    Lambda = noise * I                        (uncorrected)

and every n x n solve goes through the Woodbury identity with
A = Lambda, U = K_XZ, C = K_ZZ^-1, V = K_ZX, so only m x m systems are
factored. Fit cost is O(n m^2 + m^3), prediction O(m^2) per query.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, solve_triangular

from .errors import NumericalError, ShapeError, ValidationError
from .gp_full import NOISE_FLOOR, _check_data
from .kernels import KernelParams, cov_matrix, jittered_cholesky
from .pareto import crowding_distance, nondominated_mask

logger = logging.getLogger(__name__)

MIN_SEPARATION = 1e-9


def default_inducing_count(n: int) -> int:
    return min(64, max(8, math.ceil(math.sqrt(n))))


@dataclass(frozen=True, eq=False)
class InducingSet:
    Z: np.ndarray
    provenance: tuple  # "pareto-anchor" | "maximin-fill" per row
    indices: tuple  # rows of the observation matrix the points came from
    requested: int = 0
    clamped: bool = False

    @property
    def m(self) -> int:
        return self.Z.shape[0]


def select_inducing(X, objectives, m: int, seed: int = 0) -> InducingSet:
    """Choose ``m`` inducing inputs from the observed inputs ``X``.

    Non-dominated observations are taken first. Too many anchors are cut
    down by crowding distance; too few are topped up by greedy maximin over
    the remaining observations. Points within 1e-9 of an already chosen
    point are skipped, so fewer than ``m`` may come back (``clamped``).
    ``seed`` only orders exact ties in the maximin step.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    F = np.asarray(objectives, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    n = X.shape[0]
    if n < 1:
        raise ValidationError("select_inducing needs at least one observation")
    if F.shape[0] != n:
        raise ShapeError(f"{n} inputs but {F.shape[0]} objective rows")
    if m < 1:
        raise ValidationError("m must be >= 1")
    requested = m
    clamped = False
    if m > n:
        logger.info("inducing count %d clamped to %d observations", m, n)
        m = n
        clamped = True

    anchors = []
    for i in np.flatnonzero(nondominated_mask(F)):
        if all(np.linalg.norm(X[i] - X[j]) > MIN_SEPARATION for j in anchors):
            anchors.append(int(i))
    if len(anchors) > m:
        crowd = crowding_distance(F[anchors])
        # largest crowding first; stable on index for ties
        order = sorted(range(len(anchors)), key=lambda k: (-crowd[k], anchors[k]))
        anchors = sorted(anchors[k] for k in order[:m])
    chosen = list(anchors)
    provenance = ["pareto-anchor"] * len(chosen)

    if len(chosen) < m:
        tiebreak = np.random.default_rng(seed).permutation(n)
        mind = np.min(np.linalg.norm(X[:, None, :] - X[chosen][None, :, :], axis=2), axis=1)
        available = np.ones(n, dtype=bool)
        available[chosen] = False
        while len(chosen) < m:
            cand = np.flatnonzero(available & (mind > MIN_SEPARATION))
            if cand.size == 0:
                clamped = True
                break
            best = int(cand[np.lexsort((tiebreak[cand], -mind[cand]))[0]])
            chosen.append(best)
            provenance.append("maximin-fill")
            available[best] = False
            mind = np.minimum(mind, np.linalg.norm(X - X[best], axis=1))
    return InducingSet(X[chosen].copy(), tuple(provenance), tuple(chosen), requested, clamped)


def woodbury_solve(a_diag, U, C_inv, V, b):
    """Solve ``(A + U C V) x = b`` with ``A = diag(a_diag)``.

    Takes ``C^-1`` directly (for the sparse GP that is K_ZZ). Only the m x m
    inner matrix ``C^-1 + V A^-1 U`` is factored.
    """
    a = np.asarray(a_diag, dtype=np.float64).ravel()
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    C_inv = np.atleast_2d(np.asarray(C_inv, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    m = C_inv.shape[0]
    if np.any(a <= 0):
        raise ValidationError("diagonal of A must be positive")
    if U.shape != (n, m) or V.shape != (m, n) or C_inv.shape != (m, m) or b.shape[0] != n:
        raise ShapeError(
            f"inconsistent shapes: A {n}, U {U.shape}, C^-1 {C_inv.shape}, V {V.shape}, b {b.shape}"
        )
    bb = b if b.ndim > 1 else b[:, None]
    Ainv_b = bb / a[:, None]
    Ainv_U = U / a[:, None]
    inner = C_inv + V @ Ainv_U
    if not np.any(U) or not np.any(V):
        x = Ainv_b
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)  # singularity is reported below
            lu = lu_factor(inner, check_finite=False)
        if np.any(np.abs(np.diag(lu[0])) <= np.finfo(float).eps * np.abs(inner).max() * m):
            raise NumericalError("inner Woodbury matrix is singular")
        x = Ainv_b - Ainv_U @ lu_solve(lu, V @ Ainv_b, check_finite=False)
    return x if b.ndim > 1 else x[:, 0]


@dataclass(frozen=True, eq=False)
class SGPModel:
    Z: InducingSet
    params: KernelParams
    noise: float
    prior_mean: float
    kzz_factor: np.ndarray  # lower Cholesky of K_ZZ (+ jitter)
    b_factor: np.ndarray  # lower Cholesky of I + L^-1 K_ZX Lambda^-1 K_XZ L^-T
    weight: np.ndarray  # m-vector, mean = prior_mean + k_*Z @ weight
    fitc_diag: np.ndarray  # Lambda
    fitc: bool = True
    jitter: float = 0.0

    @property
    def woodbury_factor(self) -> np.ndarray:
        """Lower Cholesky factor of the inner matrix K_ZZ + K_ZX Lambda^-1 K_XZ."""
        return self.kzz_factor @ self.b_factor

    @property
    def d(self) -> int:
        return self.Z.Z.shape[1]

    def predict(self, Xstar):
        return predict_sparse(self, Xstar)


def fit_sparse(X, y, Z: InducingSet | np.ndarray, params: KernelParams,
               noise: float = NOISE_FLOOR, *, fitc: bool = True,
               prior_mean: float | None = None) -> SGPModel:
    X, y = _check_data(X, y)
    if not isinstance(Z, InducingSet):
        Zarr = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        Z = InducingSet(Zarr, ("given",) * Zarr.shape[0], tuple(range(Zarr.shape[0])), Zarr.shape[0])
    if Z.Z.shape[1] != X.shape[1]:
        raise ShapeError(f"inducing points have dimension {Z.Z.shape[1]}, data {X.shape[1]}")
    if noise < 0:
        raise ValidationError("noise must be >= 0")
    noise = float(noise)
    mu0 = float(np.mean(y)) if prior_mean is None else float(prior_mean)
    r = y - mu0

    Kzz = cov_matrix(Z.Z, p=params)
    Kxz = cov_matrix(X, Z.Z, params)
    L, jitter = jittered_cholesky(Kzz, params.variance)
    W = solve_triangular(L, Kxz.T, lower=True, check_finite=False)  # m x n, W^T W = Q
    if fitc:
        q_diag = np.einsum("ij,ij->j", W, W)
        lam = np.maximum(params.variance - q_diag, 0.0) + noise
    else:
        lam = np.full(X.shape[0], noise)
    if np.any(lam <= 0):
        raise NumericalError("zero noise with an exact low-rank fit; use noise > 0")
    Ws = W / np.sqrt(lam)
    B = Ws @ Ws.T
    B[np.diag_indices_from(B)] += 1.0
    LB, _ = jittered_cholesky(B, 1.0)
    c = solve_triangular(LB, W @ (r / lam), lower=True, check_finite=False)
    tmp = solve_triangular(LB.T, c, lower=False, check_finite=False)
    weight = solve_triangular(L.T, tmp, lower=False, check_finite=False)
    return SGPModel(Z, params, noise, mu0, L, LB, weight, lam, fitc, jitter)


def predict_sparse(m: SGPModel, xstar):
    """Posterior mean and latent variance; scalars for a single 1-D query."""
    xs = np.asarray(xstar, dtype=np.float64)
    single = xs.ndim == 1
    if single:
        xs = xs[None, :]
    if xs.ndim != 2 or xs.shape[1] != m.d:
        raise ShapeError(f"query dimension {xs.shape[-1]} does not match model dimension {m.d}")
    Ksz = cov_matrix(xs, m.Z.Z, m.params)
    mu = m.prior_mean + Ksz @ m.weight
    a = solve_triangular(m.kzz_factor, Ksz.T, lower=True, check_finite=False)
    c = solve_triangular(m.b_factor, a, lower=True, check_finite=False)
    var = m.params.variance - np.einsum("ij,ij->j", a, a) + np.einsum("ij,ij->j", c, c)
    var = np.maximum(var, 0.0)
    if single:
        return float(mu[0]), float(var[0])
    return mu, var
