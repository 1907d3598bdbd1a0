"""Posterior summaries and prediction from stored chain draws.

Two point summaries of the coefficients are produced: the plain posterior
mean, and a predictive-loss-weighted mean where each draw is weighted by
that draw's second-moment matrix of a new covariate vector
(covariance plus outer product of the mean). Prediction intervals come
from empirical quantiles of per-draw predictive samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import ChainOutput
from .stats import NotPositiveDefinite, Rng, spd_inverse, spd_solve


@dataclass
class PosteriorSummary:
    beta0_hat: float
    beta_ppm: np.ndarray
    beta_pm: np.ndarray
    levels: tuple[float, float] = (0.025, 0.975)

    def __post_init__(self):
        lo, hi = self.levels
        if not 0.0 < lo < hi < 1.0:
            raise ValueError(f"quantile levels must satisfy 0 < lo < hi < 1, got {self.levels}")


def weighted_beta_mean(weights: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """solve(sum_t W_t, sum_t W_t beta_t): matrix-weighted average of the
    coefficient draws. Scaling every weight by a common constant cancels."""
    w_sum = weights.sum(axis=0)
    rhs = np.einsum("tij,tj->i", weights, betas)
    try:
        return spd_solve(w_sum, rhs)
    except NotPositiveDefinite as exc:  # cannot happen for valid draws
        raise NotPositiveDefinite(f"summed weight matrix is singular: {exc}") from exc


def _draw_weights(chain: ChainOutput) -> np.ndarray:
    t, p = chain.beta.shape
    weights = np.empty((t, p, p))
    for i in range(t):
        weights[i] = spd_inverse(chain.sigma_x_inv[i]) + np.outer(chain.mu_x[i], chain.mu_x[i])
    return weights


def beta_ppm(chain: ChainOutput) -> np.ndarray:
    """Predictive-loss summary of beta: weight each draw by the implied
    second moment of a new covariate vector, then average."""
    if chain.n_draws < 1:
        raise ValueError("empty chain")
    return weighted_beta_mean(_draw_weights(chain), chain.beta)


def beta_pm(chain: ChainOutput) -> np.ndarray:
    """Plain posterior mean of beta."""
    if chain.n_draws < 1:
        raise ValueError("empty chain")
    return chain.beta.mean(axis=0)


def summarize_chain(chain: ChainOutput, levels=(0.025, 0.975)) -> PosteriorSummary:
    return PosteriorSummary(
        beta0_hat=float(chain.beta0.mean()),
        beta_ppm=beta_ppm(chain),
        beta_pm=beta_pm(chain),
        levels=tuple(levels),
    )


def predictive_draws_from_arrays(
    rng: Rng,
    beta0: np.ndarray,
    beta: np.ndarray,
    sigma2: np.ndarray,
    x_new: np.ndarray,
    noise: str = "sd",
) -> np.ndarray:
    """Per-draw predictive samples for each new covariate row.

    Returns an (m, T) array: row i holds beta0_t + x_i'beta_t + s_t * eps
    over the stored draws, eps i.i.d. standard normal. noise="sd" scales
    eps by the draw's standard deviation (dimensionally consistent with
    the outcome model); noise="variance" scales by the variance instead,
    for replicating conventions that inject variance-scaled noise.
    """
    if noise not in ("sd", "variance"):
        raise ValueError(f"noise must be 'sd' or 'variance', got {noise!r}")
    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    beta0 = np.asarray(beta0, dtype=float)
    beta = np.asarray(beta, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    scale = np.sqrt(sigma2) if noise == "sd" else sigma2
    eps = rng.generator.standard_normal((x_new.shape[0], beta0.size))
    return beta0[None, :] + x_new @ beta.T + scale[None, :] * eps


def predictive_draws(
    rng: Rng, chain: ChainOutput, x_new: np.ndarray, noise: str = "sd"
) -> np.ndarray:
    """predictive_draws_from_arrays over a chain's stored draws."""
    return predictive_draws_from_arrays(rng, chain.beta0, chain.beta, chain.sigma2, x_new, noise)


def prediction_interval(draws: np.ndarray, p_lo: float = 0.025, p_hi: float = 0.975):
    """Empirical quantile interval of a predictive draw set.

    Quantiles use linear interpolation between order statistics (numpy's
    "linear" method): the q-th quantile sits at position (n-1) * q.
    """
    if not 0.0 < p_lo < p_hi < 1.0:
        raise ValueError("need 0 < p_lo < p_hi < 1")
    draws = np.asarray(draws, dtype=float)
    lo = np.quantile(draws, p_lo, axis=-1, method="linear")
    hi = np.quantile(draws, p_hi, axis=-1, method="linear")
    return lo, hi


def mspe(beta0_hat: float, beta_hat: np.ndarray, y_new: np.ndarray, x_new: np.ndarray) -> float:
    """Mean squared prediction error of the point predictor
    beta0_hat + x'beta_hat over validation pairs."""
    resid = np.asarray(y_new, dtype=float) - beta0_hat - np.atleast_2d(x_new) @ np.asarray(beta_hat)
    return float(np.mean(resid**2))


def coverage(draws: np.ndarray, y_new: np.ndarray, p_lo: float = 0.025, p_hi: float = 0.975):
    """Fraction of validation outcomes inside their prediction intervals,
    plus the mean interval width."""
    lo, hi = prediction_interval(draws, p_lo, p_hi)
    y_new = np.asarray(y_new, dtype=float)
    inside = (y_new >= lo) & (y_new <= hi)
    return float(inside.mean()), float(np.mean(hi - lo))
