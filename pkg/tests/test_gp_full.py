import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsebo.errors import ShapeError, ValidationError
from sparsebo.gp_full import (
    GRID_MULTIPLIERS,
    NOISE_FLOOR,
    fit_full,
    hyperparameter_grid,
    log_marginal_likelihood,
    predict_full,
    select_hyperparameters,
)
from sparsebo.kernels import KernelParams


def k_dense(A, B, var, ls):
    r = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
    s = math.sqrt(3) * r / ls
    return var * (1 + s) * np.exp(-s)


def dense_posterior(X, y, Xs, var, ls, noise, mean):
    K = k_dense(X, X, var, ls) + noise * np.eye(len(X))
    Kinv = np.linalg.inv(K)
    Ks = k_dense(Xs, X, var, ls)
    mu = mean + Ks @ Kinv @ (y - mean)
    cov = var - np.einsum("ij,jk,ik->i", Ks, Kinv, Ks)
    return mu, cov


def dense_lml(X, y, var, ls, noise):
    K = k_dense(X, X, var, ls) + noise * np.eye(len(X))
    r = y - y.mean()
    _, logdet = np.linalg.slogdet(K)
    return -0.5 * r @ np.linalg.solve(K, r) - 0.5 * logdet - 0.5 * len(X) * math.log(2 * math.pi)


def random_problem(rng, n, d):
    X = rng.random((n, d))
    y = np.sin(4 * X).sum(axis=1) + 0.1 * rng.standard_normal(n)
    return X, y


def test_interpolation_single_point():
    m = fit_full([[0.0]], [2.0], KernelParams(1.0, 1.0), noise=0.0)
    mu, var = predict_full(m, [0.0])
    assert mu == pytest.approx(2.0, abs=1e-8) and var == pytest.approx(0.0, abs=1e-8)


def test_interpolation_at_training_points(rng):
    X, y = random_problem(rng, 15, 2)
    m = fit_full(X, y, KernelParams(1.0, 0.3), noise=0.0)
    mu, var = predict_full(m, X)
    np.testing.assert_allclose(mu, y, atol=1e-8)
    np.testing.assert_allclose(var, 0.0, atol=1e-8)


def test_far_field_limit(rng):
    X, y = random_problem(rng, 20, 3)
    m = fit_full(X, y, KernelParams(2.0, 0.1), noise=1e-4)
    mu, var = predict_full(m, np.full(3, 50.0))
    assert mu == pytest.approx(m.prior_mean, abs=1e-6) and var == pytest.approx(2.0, abs=1e-6)
    assert m.prior_mean == pytest.approx(y.mean())


def test_cholesky_reconstruction(rng):
    X, y = random_problem(rng, 50, 4)
    p = KernelParams(1.5, 0.5)
    m = fit_full(X, y, p, noise=1e-3)
    K = k_dense(X, X, 1.5, 0.5) + 1e-3 * np.eye(50)
    assert np.linalg.norm(m.chol @ m.chol.T - K) / np.linalg.norm(K) < 1e-8


def test_dense_oracle_n30(rng):
    X, y = random_problem(rng, 30, 3)
    Xs = rng.random((10, 3))
    m = fit_full(X, y, KernelParams(1.2, 0.4), noise=1e-2)
    mu, var = predict_full(m, Xs)
    mu_ref, var_ref = dense_posterior(X, y, Xs, 1.2, 0.4, 1e-2, y.mean())
    np.testing.assert_allclose(mu, mu_ref, rtol=1e-8)
    np.testing.assert_allclose(var, var_ref, rtol=1e-8)


def test_duplicate_rows_engage_jitter():
    X = np.array([[0.1, 0.2], [0.1, 0.2], [0.5, 0.5]])
    m = fit_full(X, [1.0, 1.0, 2.0], KernelParams(), noise=0.0)
    assert m.jitter > 0
    mu, _ = predict_full(m, X[2])
    assert math.isfinite(mu)


def test_errors(rng):
    with pytest.raises(ValidationError):
        fit_full(np.empty((0, 2)), [], KernelParams())
    m = fit_full(rng.random((5, 2)), rng.random(5), KernelParams())
    with pytest.raises(ShapeError):
        predict_full(m, np.zeros(3))
    with pytest.raises(ShapeError):
        fit_full(rng.random((5, 2)), rng.random(4), KernelParams())


def test_lml_single_point():
    m = fit_full([[0.0]], [3.0], KernelParams(1.0, 1.0), noise=0.0, prior_mean=3.0)
    assert log_marginal_likelihood(m) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert round(log_marginal_likelihood(m), 6) == -0.918939


def test_lml_matches_dense(rng):
    X, y = random_problem(rng, 25, 2)
    m = fit_full(X, y, KernelParams(0.8, 0.6), noise=1e-2)
    assert log_marginal_likelihood(m) == pytest.approx(dense_lml(X, y, 0.8, 0.6, 1e-2), rel=1e-10)


def test_lml_decreases_when_residuals_scaled(rng):
    X, y = random_problem(rng, 10, 2)
    p = KernelParams(1.0, 0.5)
    a = fit_full(X, y, p, noise=1e-2, prior_mean=0.0)
    b = fit_full(X, 10 * y, p, noise=1e-2, prior_mean=0.0)
    assert log_marginal_likelihood(b) < log_marginal_likelihood(a)


def test_grid_brute_force(rng):
    X, y = random_problem(rng, 40, 3)
    grid = list(hyperparameter_grid(X, y))
    assert len(grid) == len(GRID_MULTIPLIERS) ** 3 == 125
    assert all(noise >= NOISE_FLOOR for _, noise in grid)
    scores = [dense_lml(X, y, p.variance, p.lengthscale, noise) for p, noise in grid]
    best = int(np.argmax(scores))
    choice = select_hyperparameters(X, y)
    assert (choice.params, choice.noise) == grid[best]
    assert choice.lml == pytest.approx(scores[best], rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 40), d=st.integers(1, 4))
def test_posterior_invariants(seed, n, d):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng, n, d)
    Xs = rng.random((8, d))
    p = KernelParams(1.3, 0.5)
    m = fit_full(X, y, p, noise=1e-3, prior_mean=0.0)
    mu, var = predict_full(m, Xs)
    assert np.all(var >= 0) and np.all(var <= p.variance + 1e-10)
    # one more observation never raises the variance
    x_new = rng.random((1, d))
    m2 = fit_full(np.vstack([X, x_new]), np.append(y, 0.3), p, noise=1e-3, prior_mean=0.0)
    _, var2 = predict_full(m2, Xs)
    assert np.all(var2 <= var + 1e-8)
    # row order does not matter
    perm = rng.permutation(n)
    mp, vp = predict_full(fit_full(X[perm], y[perm], p, noise=1e-3, prior_mean=0.0), Xs)
    np.testing.assert_allclose(mp, mu, atol=1e-10)
    np.testing.assert_allclose(vp, var, atol=1e-10)
