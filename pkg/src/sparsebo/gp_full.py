"""Exact GP regression with a constant prior mean.

Serves as the reference posterior for the sparse model and as the marginal
likelihood used for hyperparameter selection. All solves go through a
Cholesky factor; no inverse is ever formed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import NumericalError, ShapeError, ValidationError
from .kernels import KernelParams, cov_matrix, jittered_cholesky, lengthscale_heuristic

NOISE_FLOOR = 1e-6
GRID_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)
_LOG_2PI = math.log(2.0 * math.pi)


def _check_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError(f"need a non-empty n x d training set, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("training data contains non-finite values")
    return np.ascontiguousarray(X), y


@dataclass(frozen=True, eq=False)
class GPModel:
    X: np.ndarray
    y: np.ndarray
    params: KernelParams
    noise: float
    prior_mean: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def predict(self, Xstar):
        return predict_full(self, Xstar)


def fit_full(X, y, params: KernelParams, noise: float = NOISE_FLOOR,
             prior_mean: float | None = None) -> GPModel:
    X, y = _check_data(X, y)
    if noise < 0:
        raise ValidationError(f"noise must be >= 0, got {noise}")
    mu0 = float(np.mean(y)) if prior_mean is None else float(prior_mean)
    K = cov_matrix(X, p=params, noise=noise)
    L, jitter = jittered_cholesky(K, params.variance)
    alpha = cho_solve((L, True), y - mu0, check_finite=False)
    return GPModel(X, y, params, float(noise), mu0, L, alpha, jitter)


def predict_full(m: GPModel, xstar):
    """Posterior mean and variance of the latent function.

    A 1-D ``xstar`` is one point and gives scalars; a 2-D array gives arrays.
    """
    xs = np.asarray(xstar, dtype=np.float64)
    single = xs.ndim == 1
    if single:
        xs = xs[None, :]
    if xs.ndim != 2 or xs.shape[1] != m.d:
        raise ShapeError(f"query dimension {xs.shape[-1]} does not match model dimension {m.d}")
    Ks = cov_matrix(xs, m.X, m.params)
    mu = m.prior_mean + Ks @ m.alpha
    v = solve_triangular(m.chol, Ks.T, lower=True, check_finite=False)
    var = m.params.variance - np.einsum("ij,ij->j", v, v)
    var = np.maximum(var, 0.0)
    if single:
        return float(mu[0]), float(var[0])
    return mu, var


def log_marginal_likelihood(m: GPModel) -> float:
    r = m.y - m.prior_mean
    return float(
        -0.5 * r @ m.alpha
        - np.sum(np.log(np.diag(m.chol)))
        - 0.5 * m.n * _LOG_2PI
    )


@dataclass(frozen=True)
class HyperChoice:
    params: KernelParams
    noise: float
    lml: float


def hyperparameter_grid(X, y, *, base_lengthscale: float | None = None,
                        base_variance: float | None = None,
                        base_noise: float | None = None):
    """The 125 (lengthscale, variance, noise) triples around the heuristics."""
    X, y = _check_data(X, y)
    if base_lengthscale is None:
        try:
            base_lengthscale = lengthscale_heuristic(X)
        except ValidationError:
            base_lengthscale = 1.0
    if base_variance is None:
        base_variance = float(np.var(y))
        if not base_variance > 0:
            base_variance = 1.0
    if base_noise is None:
        base_noise = max(NOISE_FLOOR, 1e-2 * base_variance)
    for a, b, c in itertools.product(GRID_MULTIPLIERS, repeat=3):
        yield (KernelParams(base_variance * b, base_lengthscale * a),
               max(NOISE_FLOOR, base_noise * c))


def select_hyperparameters(X, y, **bases) -> HyperChoice:
    """Grid search over the likelihood; first maximum wins on ties."""
    X, y = _check_data(X, y)
    best = None
    cache: dict[float, np.ndarray] = {}
    mu0 = float(np.mean(y))
    r = y - mu0
    n = X.shape[0]
    for params, noise in hyperparameter_grid(X, y, **bases):
        # unit-variance kernel matrix depends only on the lengthscale
        K1 = cache.get(params.lengthscale)
        if K1 is None:
            K1 = cov_matrix(X, p=KernelParams(1.0, params.lengthscale))
            cache[params.lengthscale] = K1
        K = params.variance * K1
        K[np.diag_indices(n)] += noise
        try:
            L, _ = jittered_cholesky(K, params.variance)
        except NumericalError:
            continue
        alpha = cho_solve((L, True), r, check_finite=False)
        lml = float(-0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI)
        if best is None or lml > best.lml:
            best = HyperChoice(params, noise, lml)
    if best is None:
        raise NumericalError("no grid point produced a positive-definite covariance")
    return best
