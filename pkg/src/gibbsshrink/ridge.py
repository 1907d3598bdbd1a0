"""Frequentist comparator: ridge regression with GCV-selected penalty.

Fit on the complete subsample only, centering the response and covariate
columns so the intercept stays unpenalized. The generalized
cross-validation score is

    GCV(lam) = (1/n) ||y_c - H y_c||^2 / (1 - tr(H)/n)^2,
    H = x_c (x_c'x_c + lam I)^{-1} x_c',

evaluated over a penalty grid via one SVD of the centered design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SingularDesign
from .stats import NotPositiveDefinite, spd_solve


class EmptyGrid(Exception):
    """The penalty grid has no points."""


@dataclass
class RidgeFit:
    beta0_hat: float
    beta_hat: np.ndarray
    lambda_star: float
    gcv_curve: list[tuple[float, float]]  # (penalty, score), grid order


def _center(y: np.ndarray, x: np.ndarray):
    y = np.asarray(y, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ybar = float(y.mean())
    xbar = x.mean(axis=0)
    return y - ybar, x - xbar[None, :], ybar, xbar


def ridge_fit(y: np.ndarray, x: np.ndarray, lam: float):
    """Penalized least squares on centered data.

    Returns (beta0_hat, beta_hat) with beta0_hat = mean(y) - xbar'beta_hat.
    lam = 0 requires an invertible centered Gram matrix, which needs
    p < n; otherwise SingularDesign is raised.
    """
    if lam < 0:
        raise ValueError(f"penalty must be nonnegative, got {lam}")
    y_c, x_c, ybar, xbar = _center(y, x)
    n, p = x_c.shape
    if lam == 0 and p >= n:
        raise SingularDesign(f"unpenalized fit needs p < n (p={p}, n={n})")
    gram = x_c.T @ x_c + lam * np.eye(p)
    try:
        beta_hat = spd_solve(gram, x_c.T @ y_c)
    except NotPositiveDefinite as exc:
        raise SingularDesign(f"centered Gram matrix is singular at lam={lam}: {exc}") from exc
    return ybar - float(xbar @ beta_hat), beta_hat


def default_grid(x: np.ndarray, size: int = 50) -> np.ndarray:
    """Log-spaced penalty grid spanning [1e-4, 1e4] times the mean
    eigenvalue of the centered Gram matrix, so the effective model size
    sweeps from nearly p down to nearly 0."""
    _, x_c, _, _ = _center(np.zeros(np.atleast_2d(x).shape[0]), x)
    mean_eig = float(np.sum(x_c * x_c)) / x_c.shape[1]  # tr(x'x)/p
    return mean_eig * np.logspace(-4, 4, size)


def gcv_select(y: np.ndarray, x: np.ndarray, grid=None) -> RidgeFit:
    """Minimize the GCV score over the grid and refit at the winner."""
    y_c, x_c, _, _ = _center(y, x)
    n = y_c.size
    if grid is None:
        grid = default_grid(x)
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise EmptyGrid("penalty grid is empty")

    u, d, _ = np.linalg.svd(x_c, full_matrices=False)
    c = u.T @ y_c
    ortho_sq = float(y_c @ y_c) - float(c @ c)  # component outside the column space
    d2 = d * d

    curve = []
    for lam in grid:
        if lam == 0.0:
            shrink = (d2 > 0).astype(float)  # projection onto the column space
        else:
            shrink = d2 / (d2 + lam)
        rss = ortho_sq + float(np.sum(((1.0 - shrink) * c) ** 2))
        df = float(shrink.sum())
        score = (rss / n) / (1.0 - df / n) ** 2
        curve.append((float(lam), score))
    best = min(range(len(curve)), key=lambda i: curve[i][1])
    lam_star = float(grid[best])
    beta0_hat, beta_hat = ridge_fit(y, x, lam_star)
    return RidgeFit(beta0_hat=beta0_hat, beta_hat=beta_hat, lambda_star=lam_star, gcv_curve=curve)
