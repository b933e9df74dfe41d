import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsebo.errors import NumericalError, ShapeError, ValidationError
from sparsebo.gp_full import fit_full, predict_full
from sparsebo.gp_sparse import (
    default_inducing_count,
    fit_sparse,
    predict_sparse,
    select_inducing,
    woodbury_solve,
)
from sparsebo.kernels import KernelParams, cov_matrix


def random_problem(rng, n, d):
    X = rng.random((n, d))
    return X, np.cos(3 * X).sum(axis=1) + 0.05 * rng.standard_normal(n)


def dense_fitc(X, y, Z, Xs, p, noise, fitc=True):
    """FITC posterior written with n x n dense solves."""
    Kzz_inv = np.linalg.inv(cov_matrix(Z, p=p))
    Kxz = cov_matrix(X, Z, p)
    Ksz = cov_matrix(Xs, Z, p)
    Q = Kxz @ Kzz_inv @ Kxz.T
    lam = (p.variance - np.diag(Q) if fitc else 0.0) + noise
    S = Q + np.diag(np.broadcast_to(lam, (len(X),)))
    Qsx = Ksz @ Kzz_inv @ Kxz.T
    r = y - y.mean()
    mu = y.mean() + Qsx @ np.linalg.solve(S, r)
    qss = np.einsum("ij,jk,ik->i", Ksz, Kzz_inv, Ksz)
    var = p.variance - qss + qss - np.einsum("ij,ij->i", Qsx, np.linalg.solve(S, Qsx.T).T)
    return mu, var


# -- woodbury --------------------------------------------------------------

def test_woodbury_scalar():
    assert woodbury_solve([1.0], [[1.0]], [[1.0]], [[1.0]], [1.0])[0] == pytest.approx(0.5, abs=1e-15)


def test_woodbury_dense_oracle(rng):
    n, m = 200, 20
    a = rng.uniform(0.5, 2.0, n)
    G = rng.standard_normal((m, m))
    C = G @ G.T + m * np.eye(m)
    U = rng.standard_normal((n, m))
    b = rng.standard_normal(n)
    x = woodbury_solve(a, U, np.linalg.inv(C), U.T, b)
    ref = np.linalg.solve(np.diag(a) + U @ C @ U.T, b)
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-8


def test_woodbury_zero_update(rng):
    a = rng.uniform(0.5, 2.0, 30)
    b = rng.standard_normal(30)
    x = woodbury_solve(a, np.zeros((30, 4)), np.eye(4), np.zeros((4, 30)), b)
    np.testing.assert_array_equal(x, b / a)


def test_woodbury_errors(rng):
    with pytest.raises(ShapeError):
        woodbury_solve(np.ones(3), np.ones((3, 2)), np.eye(2), np.ones((2, 4)), np.ones(3))
    with pytest.raises(NumericalError):
        woodbury_solve(np.ones(2), np.ones((2, 1)), [[-2.0]], np.ones((1, 2)), np.ones(2))
    with pytest.raises(ValidationError):
        woodbury_solve(np.zeros(2), np.ones((2, 1)), [[1.0]], np.ones((1, 2)), np.ones(2))


# -- fit / predict ---------------------------------------------------------

def test_z_equals_x_matches_full(rng):
    X, y = random_problem(rng, 100, 3)
    Xs = rng.random((20, 3))
    p, noise = KernelParams(1.0, 0.3), 1e-2
    s = fit_sparse(X, y, X, p, noise)
    mu_s, var_s = predict_sparse(s, Xs)
    mu_f, var_f = predict_full(fit_full(X, y, p, noise), Xs)
    np.testing.assert_allclose(mu_s, mu_f, atol=1e-6)
    np.testing.assert_allclose(var_s, var_f, atol=1e-6)
    np.testing.assert_allclose(s.fitc_diag, noise, atol=1e-8)


@pytest.mark.parametrize("fitc", [True, False])
def test_dense_fitc_oracle(rng, fitc):
    X, y = random_problem(rng, 80, 2)
    Z = X[::7]
    Xs = rng.random((15, 2))
    p, noise = KernelParams(1.4, 0.4), 1e-2
    s = fit_sparse(X, y, Z, p, noise, fitc=fitc)
    mu, var = predict_sparse(s, Xs)
    mu_ref, var_ref = dense_fitc(X, y, Z, Xs, p, noise, fitc)
    np.testing.assert_allclose(mu, mu_ref, rtol=1e-7, atol=1e-9)
    np.testing.assert_allclose(var, var_ref, rtol=1e-7, atol=1e-9)


def test_woodbury_factor_is_inner_cholesky(rng):
    X, y = random_problem(rng, 60, 2)
    Z = X[:8]
    p, noise = KernelParams(), 1e-2
    s = fit_sparse(X, y, Z, p, noise)
    Kxz = cov_matrix(X, Z, p)
    inner = cov_matrix(Z, p=p) + Kxz.T @ (Kxz / s.fitc_diag[:, None])
    R = s.woodbury_factor
    np.testing.assert_allclose(R @ R.T, inner, rtol=1e-9)


def test_far_field(rng):
    X, y = random_problem(rng, 50, 2)
    s = fit_sparse(X, y, X[:10], KernelParams(2.0, 0.2), 1e-3)
    mu, var = predict_sparse(s, np.array([40.0, 40.0]))
    assert mu == pytest.approx(s.prior_mean, abs=1e-4) and var == pytest.approx(2.0, abs=1e-4)


def test_single_inducing_point_interpolates():
    s = fit_sparse([[0.0]], [1.7], [[0.0]], KernelParams(), noise=1e-12)
    assert predict_sparse(s, [0.0])[0] == pytest.approx(1.7, abs=1e-6)
    s = fit_sparse([[0.0]], [1.7], [[0.0]], KernelParams(), noise=1e-12, prior_mean=0.0)
    assert predict_sparse(s, [0.0])[0] == pytest.approx(1.7, abs=1e-6)


def test_shape_errors(rng):
    X, y = random_problem(rng, 10, 2)
    with pytest.raises(ShapeError):
        fit_sparse(X, y, rng.random((3, 3)), KernelParams())
    s = fit_sparse(X, y, X[:3], KernelParams())
    with pytest.raises(ShapeError):
        predict_sparse(s, np.zeros(5))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(5, 60), m=st.integers(1, 10))
def test_variance_bounds(seed, n, m):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng, n, 3)
    p = KernelParams(1.1, 0.5)
    s = fit_sparse(X, y, X[: min(m, n)], p, 1e-4)
    _, var = predict_sparse(s, rng.random((10, 3)))
    assert np.all(var >= 0) and np.all(var <= p.variance + 1e-10)


# -- inducing selection ----------------------------------------------------

def test_inducing_front_points():
    X = np.array([[0.0], [1.0], [2.0]])
    F = np.array([[1, 2], [2, 1], [2, 2]], dtype=float)
    ind = select_inducing(X, F, 2)
    assert sorted(ind.indices) == [0, 1]
    assert ind.provenance == ("pareto-anchor", "pareto-anchor")


def test_inducing_maximin_fill_oracle(rng):
    X = rng.random((10, 2))
    F = np.column_stack([np.arange(10.0), np.arange(10.0)])  # single front member: row 0
    ind = select_inducing(X, F, 3, seed=5)
    assert ind.indices[0] == 0 and ind.provenance == ("pareto-anchor", "maximin-fill", "maximin-fill")
    dist = lambda i, j: np.linalg.norm(X[i] - X[j])
    # greedy maximin as an exhaustive search over ordered 2-subsets, scored lexicographically
    best = max(itertools.permutations(range(1, 10), 2),
               key=lambda ab: (dist(ab[0], 0), min(dist(ab[1], 0), dist(ab[1], ab[0]))))
    assert ind.indices[1:] == best


def test_inducing_clamp(rng):
    X = rng.random((20, 3))
    F = rng.random((20, 2))
    ind = select_inducing(X, F, 50)
    assert ind.m == 20 and ind.clamped and ind.requested == 50
    assert sorted(ind.indices) == list(range(20))


def test_inducing_crowding_cut():
    t = np.linspace(0, 1, 9)
    F = np.column_stack([t, 1 - t])  # all nine are non-dominated
    X = F.copy()
    ind = select_inducing(X, F, 3)
    # boundary points have infinite crowding distance and must survive
    assert 0 in ind.indices and 8 in ind.indices and ind.m == 3


def test_inducing_deterministic(rng):
    X, F = rng.random((40, 4)), rng.random((40, 2))
    a, b = select_inducing(X, F, 12, seed=3), select_inducing(X, F, 12, seed=3)
    assert a.indices == b.indices


def test_default_inducing_count():
    assert [default_inducing_count(n) for n in (1, 64, 65, 100, 5000)] == [8, 8, 9, 10, 64]
