"""Ridge/GCV baseline against eigen and least-squares oracles."""

import numpy as np
import pytest

from gibbsshrink.model import SingularDesign
from gibbsshrink.ridge import EmptyGrid, default_grid, gcv_select, ridge_fit


def make_xy(seed=0, n=30, p=4, noise=0.5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    beta = rng.normal(size=p)
    y = 1.0 + x @ beta + noise * rng.normal(size=n)
    return y, x


def test_total_shrinkage_limit():
    y, x = make_xy()
    b0, b = ridge_fit(y, x, 1e12)
    np.testing.assert_allclose(b, np.zeros(4), atol=1e-8)
    assert b0 == pytest.approx(y.mean(), abs=1e-8)


def test_zero_penalty_matches_ols_oracle():
    y, x = make_xy(seed=1)
    b0, b = ridge_fit(y, x, 0.0)
    design = np.hstack([np.ones((len(y), 1)), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    assert b0 == pytest.approx(coef[0], abs=1e-10)
    np.testing.assert_allclose(b, coef[1:], atol=1e-10)


def test_orthonormal_shrinkage_identity():
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(20, 3)))
    q = q - q.mean(axis=0)  # keep columns centered so centering is a no-op
    q, _ = np.linalg.qr(q)
    y = rng.normal(size=20)
    lam = 0.7
    _, b = ridge_fit(y, q, lam)
    y_c = y - y.mean()
    np.testing.assert_allclose(b, (q.T @ y_c) / (1.0 + lam), atol=1e-10)


def test_zero_penalty_wide_design_rejected():
    y, x = make_xy(n=4, p=6)
    with pytest.raises(SingularDesign):
        ridge_fit(y, x, 0.0)
    with pytest.raises(ValueError):
        ridge_fit(y, x, -1.0)


def test_shift_equivariance():
    y, x = make_xy(seed=3)
    b0a, ba = ridge_fit(y, x, 2.0)
    b0b, bb = ridge_fit(y + 5.0, x, 2.0)
    assert b0b == pytest.approx(b0a + 5.0, abs=1e-10)
    np.testing.assert_allclose(ba, bb, atol=1e-12)


def test_gcv_single_point_grid():
    y, x = make_xy(seed=4)
    fit = gcv_select(y, x, grid=[3.0])
    assert fit.lambda_star == 3.0
    assert len(fit.gcv_curve) == 1


def test_gcv_empty_grid():
    y, x = make_xy()
    with pytest.raises(EmptyGrid):
        gcv_select(y, x, grid=[])


def test_gcv_trace_matches_explicit_hat_matrix():
    y, x = make_xy(seed=5, n=15, p=3)
    y_c = y - y.mean()
    x_c = x - x.mean(axis=0)
    for lam in (0.1, 1.0, 10.0):
        h = x_c @ np.linalg.solve(x_c.T @ x_c + lam * np.eye(3), x_c.T)
        fit = gcv_select(y, x, grid=[lam])
        rss = float(((np.eye(15) - h) @ y_c) @ ((np.eye(15) - h) @ y_c))
        expected = (rss / 15) / (1.0 - np.trace(h) / 15) ** 2
        assert fit.gcv_curve[0][1] == pytest.approx(expected, rel=1e-10)


def test_gcv_effective_size_decreases_with_penalty():
    y, x = make_xy(seed=6)
    x_c = x - x.mean(axis=0)
    d2 = np.linalg.svd(x_c, compute_uv=False) ** 2
    grid = np.logspace(-3, 3, 10)
    traces = [float(np.sum(d2 / (d2 + lam))) for lam in grid]
    assert all(a > b for a, b in zip(traces, traces[1:]))
    assert all(0.0 < 1.0 - t / len(y) <= 1.0 for t in traces)


def test_gcv_lambda_star_attains_curve_minimum():
    y, x = make_xy(seed=7)
    fit = gcv_select(y, x)
    scores = [s for _, s in fit.gcv_curve]
    lams = [l for l, _ in fit.gcv_curve]
    assert fit.lambda_star == lams[int(np.argmin(scores))]


def test_gcv_avoids_overfit_on_pure_noise():
    # with no signal and p close to n, the selected penalty should exceed
    # the bottom of the grid nearly always
    hits = 0
    for seed in range(200):
        rng = np.random.default_rng(10_000 + seed)
        x = rng.normal(size=(25, 20))
        y = rng.normal(size=25)
        grid = default_grid(x)
        fit = gcv_select(y, x, grid=grid)
        if fit.lambda_star > grid[0]:
            hits += 1
    assert hits >= 190  # 95% of 200


def test_default_grid_spans_mean_eigenvalue():
    _, x = make_xy(seed=8)
    grid = default_grid(x)
    x_c = x - x.mean(axis=0)
    mean_eig = np.trace(x_c.T @ x_c) / x.shape[1]
    assert grid[0] == pytest.approx(1e-4 * mean_eig, rel=1e-10)
    assert grid[-1] == pytest.approx(1e4 * mean_eig, rel=1e-10)
    assert len(grid) == 50
