"""Posterior summaries, predictive draws, intervals, and error metrics."""

import numpy as np
import pytest

from gibbsshrink import model as mdl
from gibbsshrink.inference import (
    PosteriorSummary,
    beta_pm,
    beta_ppm,
    coverage,
    mspe,
    prediction_interval,
    predictive_draws,
    summarize_chain,
    weighted_beta_mean,
)
from gibbsshrink.sampler import ChainConfig, Method, run_chain
from gibbsshrink.stats import Rng

from helpers import random_spd


def synthetic_chain(t=4, p=2, seed=0, constant_weights=False, sigma2=None):
    """Hand-built ChainOutput with controllable draws."""
    rng = np.random.default_rng(seed)
    from gibbsshrink.sampler import ChainOutput
    from gibbsshrink.model import Hyper

    sigma_x_inv = np.stack(
        [np.eye(p) if constant_weights else random_spd(rng, p) for _ in range(t)]
    )
    mu_x = np.zeros((t, p)) if constant_weights else rng.normal(size=(t, p))
    return ChainOutput(
        method=Method.HIERBETAS,
        beta0=rng.normal(size=t),
        beta=rng.normal(size=(t, p)),
        sigma2=np.full(t, 0.5) if sigma2 is None else np.asarray(sigma2, dtype=float),
        psi=np.zeros(t),
        nu=np.ones(t),
        tau2=np.ones(t),
        mu_x=mu_x,
        sigma_x_inv=sigma_x_inv,
        xb_mean=None,
        hyper=Hyper(lam=1.0),
        lam_trace=None,
        Lambda_trace=None,
        seed=0,
        stream=(0,),
        wall_time_s=0.0,
    )


def test_beta_ppm_equals_pm_under_constant_weights():
    chain = synthetic_chain(t=6, constant_weights=True)
    np.testing.assert_allclose(beta_ppm(chain), beta_pm(chain), atol=1e-12)


def test_beta_ppm_single_draw_is_that_draw():
    chain = synthetic_chain(t=1)
    np.testing.assert_allclose(beta_ppm(chain), chain.beta[0], atol=1e-12)


def test_beta_ppm_two_draw_hand_solve():
    chain = synthetic_chain(t=2, p=2, seed=3)
    w = np.stack(
        [
            np.linalg.inv(chain.sigma_x_inv[i]) + np.outer(chain.mu_x[i], chain.mu_x[i])
            for i in range(2)
        ]
    )
    expected = np.linalg.solve(w[0] + w[1], w[0] @ chain.beta[0] + w[1] @ chain.beta[1])
    np.testing.assert_allclose(beta_ppm(chain), expected, atol=1e-12)


def test_weighted_mean_scale_invariance_power_of_two():
    rng = np.random.default_rng(4)
    weights = np.stack([random_spd(rng, 3) for _ in range(5)])
    betas = rng.normal(size=(5, 3))
    a = weighted_beta_mean(weights, betas)
    b = weighted_beta_mean(4.0 * weights, betas)
    np.testing.assert_array_equal(a, b)  # power-of-two scaling cancels exactly
    c = weighted_beta_mean(np.pi * weights, betas)
    np.testing.assert_allclose(a, c, rtol=1e-12)


def test_beta_pm_symmetric_draws():
    chain = synthetic_chain(t=2, p=2)
    chain.beta = np.array([[1.0, 2.0], [3.0, 0.0]])
    np.testing.assert_allclose(beta_pm(chain), [2.0, 1.0])


def test_beta_pm_independent_accumulation():
    chain = synthetic_chain(t=7, p=3, seed=5)
    acc = np.zeros(3)
    for t in range(7):
        acc += chain.beta[t]
    np.testing.assert_allclose(beta_pm(chain), acc / 7.0, atol=1e-12)


def test_predictive_draws_noiseless_limit():
    chain = synthetic_chain(t=5, sigma2=np.full(5, 1e-30))
    x = np.array([[0.5, -1.0]])
    draws = predictive_draws(Rng(0), chain, x)
    linear = chain.beta0 + chain.beta @ x[0]
    np.testing.assert_allclose(draws[0], linear, atol=1e-10)


def test_predictive_draws_zero_covariates():
    chain = synthetic_chain(t=2000, seed=6)
    draws = predictive_draws(Rng(1), chain, np.zeros((1, 2)))
    expected_mean = chain.beta0.mean()
    assert abs(draws.mean() - expected_mean) < 0.1


def test_predictive_variance_decomposition():
    # frozen parameters: variance of draws is mean(sigma2) plus the spread
    # of the linear predictor (zero here)
    chain = synthetic_chain(t=20_000, seed=7)
    chain.beta0 = np.full(20_000, 1.5)
    chain.beta = np.tile([0.3, -0.2], (20_000, 1))
    chain.sigma2 = np.full(20_000, 0.8)
    draws = predictive_draws(Rng(2), chain, np.array([[1.0, 1.0]]))
    assert abs(draws.var() - 0.8) / 0.8 < 0.05


def test_predictive_noise_variance_switch():
    chain = synthetic_chain(t=3, sigma2=np.array([4.0, 4.0, 4.0]))
    x = np.zeros((1, 2))
    sd_draws = predictive_draws(Rng(3), chain, x, noise="sd")
    var_draws = predictive_draws(Rng(3), chain, x, noise="variance")
    lin = chain.beta0
    np.testing.assert_allclose((var_draws[0] - lin) / (sd_draws[0] - lin), np.full(3, 2.0))
    with pytest.raises(ValueError):
        predictive_draws(Rng(3), chain, x, noise="bogus")


def test_interval_constant_draws():
    lo, hi = prediction_interval(np.full(50, 3.3))
    assert lo == hi == 3.3


def test_interval_linear_interpolation_reference():
    draws = np.arange(1.0, 101.0)
    lo, hi = prediction_interval(draws, 0.025, 0.975)
    # reference: order statistics at fractional position (n-1) * q
    def ref(q):
        pos = (draws.size - 1) * q
        lo_i = int(np.floor(pos))
        frac = pos - lo_i
        s = np.sort(draws)
        return s[lo_i] * (1 - frac) + s[min(lo_i + 1, draws.size - 1)] * frac

    assert lo == pytest.approx(ref(0.025), abs=1e-12)
    assert hi == pytest.approx(ref(0.975), abs=1e-12)


def test_interval_widens_with_levels():
    rng = np.random.default_rng(8)
    draws = rng.normal(size=500)
    lo1, hi1 = prediction_interval(draws, 0.1, 0.9)
    lo2, hi2 = prediction_interval(draws, 0.025, 0.975)
    assert lo2 < lo1 and hi2 > hi1


def test_interval_affine_equivariance():
    rng = np.random.default_rng(9)
    draws = rng.normal(size=400)
    lo, hi = prediction_interval(draws)
    lo2, hi2 = prediction_interval(3.0 * draws + 1.0)
    assert lo2 == pytest.approx(3.0 * lo + 1.0, rel=1e-12)
    assert hi2 == pytest.approx(3.0 * hi + 1.0, rel=1e-12)


def test_mspe_perfect_and_arithmetic():
    x = np.array([[1.0], [2.0]])
    y = x[:, 0] * 2.0 + 1.0
    assert mspe(1.0, np.array([2.0]), y, x) == 0.0
    assert mspe(0.0, np.array([0.0]), np.array([1.0, -1.0]), np.zeros((2, 1))) == 1.0


def test_mspe_two_pass_oracle():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(30, 3))
    y = rng.normal(size=30)
    b0, b = 0.3, np.array([1.0, -1.0, 0.5])
    total = 0.0
    for i in range(30):
        r = y[i] - b0 - float(x[i] @ b)
        total += r * r
    assert mspe(b0, b, y, x) == pytest.approx(total / 30.0, abs=1e-12)


def test_mspe_nonnegative():
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = rng.normal(size=(5, 2))
        y = rng.normal(size=5)
        assert mspe(rng.normal(), rng.normal(size=2), y, x) >= 0.0


def test_coverage_extremes():
    draws = np.tile(np.linspace(-1e6, 1e6, 100), (4, 1))
    cov, width = coverage(draws, np.zeros(4))
    assert cov == 1.0
    narrow = np.tile(np.full(100, 5.0), (4, 1))
    cov0, _ = coverage(narrow, np.zeros(4))
    assert cov0 == 0.0


def test_coverage_calibrated_gaussian_chain():
    # draws from the exact predictive law: coverage should sit near nominal
    rng = np.random.default_rng(12)
    n_points, t = 2000, 800
    y_new = rng.normal(size=n_points)
    draws = rng.normal(size=(n_points, t))
    cov, _ = coverage(draws, y_new)
    assert abs(cov - 0.95) < 0.03


def test_summary_levels_validated():
    with pytest.raises(ValueError):
        PosteriorSummary(0.0, np.zeros(2), np.zeros(2), levels=(0.9, 0.1))


def test_summarize_real_chain():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(12, 2))
    data = mdl.Dataset(
        y_a=x @ [1.0, -1.0] + 0.1 * rng.normal(size=12),
        x_a=x,
        w_a=x + 0.3 * rng.normal(size=(12, 2)),
        y_b=[],
        w_b=np.empty((0, 2)),
    )
    chain = run_chain(data, Method.HIERBETAS, ChainConfig(burn_in=50, stored=100, k=10, seed=3))
    summary = summarize_chain(chain)
    assert summary.beta_ppm.shape == (2,)
    assert np.isfinite(summary.beta_pm).all()
