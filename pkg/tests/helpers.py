"""Shared oracles and instance builders for the test suite.

The oracles here are deliberately independent of the library code paths
they check: joint-Gaussian conditioning goes through explicit block
matrices and np.linalg.solve, the sequential conjugate updaters combine
one observation at a time.
"""

import numpy as np

from gibbsshrink.model import Dataset, MeParams, Phi
from gibbsshrink.stats import Rng


def random_spd(rng: np.random.Generator, p: int, jitter: float = 0.5) -> np.ndarray:
    a = rng.normal(size=(p, p))
    return a @ a.T + (p + jitter) * np.eye(p)


def random_phi(rng: np.random.Generator, p: int, per_gene: bool = False) -> Phi:
    if per_gene:
        me = MeParams(
            psi=rng.normal(size=p),
            nu=rng.normal(loc=1.0, scale=0.4, size=p),
            tau2=float(rng.uniform(0.5, 2.0)),
        )
    else:
        me = MeParams(
            psi=float(rng.normal()),
            nu=float(rng.normal(loc=1.0, scale=0.4)),
            tau2=float(rng.uniform(0.5, 2.0)),
        )
    return Phi(
        beta0=float(rng.normal()),
        beta=rng.normal(size=p),
        sigma2=float(rng.uniform(0.5, 2.0)),
        me=me,
        mu_x=rng.normal(size=p),
        sigma_x_inv=random_spd(rng, p),
    )


def random_dataset(rng: np.random.Generator, n_a: int, n_b: int, p: int) -> Dataset:
    return Dataset(
        y_a=rng.normal(size=n_a),
        x_a=rng.normal(size=(n_a, p)),
        w_a=rng.normal(size=(n_a, p)),
        y_b=rng.normal(size=n_b),
        w_b=rng.normal(size=(n_b, p)),
    )


def conditional_x_given_y_w(phi: Phi, y: float, w: np.ndarray):
    """Oracle: condition x on (w, y) in the explicit (2p+1)-dimensional
    joint Gaussian implied by the model, via block-matrix algebra."""
    p = phi.p
    sigma_x = np.linalg.inv(phi.sigma_x_inv)
    nu = np.diag(phi.me.nu_vec(p))
    psi = phi.me.psi_vec(p)

    mean_x = phi.mu_x
    mean_w = psi + nu @ phi.mu_x
    mean_y = phi.beta0 + phi.beta @ phi.mu_x

    c_xx = sigma_x
    c_xw = sigma_x @ nu
    c_xy = (sigma_x @ phi.beta)[:, None]
    c_ww = nu @ sigma_x @ nu + phi.me.tau2 * np.eye(p)
    c_wy = (nu @ sigma_x @ phi.beta)[:, None]
    c_yy = np.array([[float(phi.beta @ sigma_x @ phi.beta) + phi.sigma2]])

    c_oo = np.block([[c_ww, c_wy], [c_wy.T, c_yy]])
    c_xo = np.hstack([c_xw, c_xy])
    obs = np.concatenate([np.asarray(w, dtype=float), [float(y)]])
    mean_o = np.concatenate([mean_w, [mean_y]])

    gain = np.linalg.solve(c_oo, (obs - mean_o))
    cond_mean = mean_x + c_xo @ gain
    cond_cov = c_xx - c_xo @ np.linalg.solve(c_oo, c_xo.T)
    return cond_mean, cond_cov


def sequential_gaussian_posterior(obs: np.ndarray, noise_var: float):
    """Oracle: scalar-location posterior under a flat prior, built by
    combining one observation at a time with precision weighting."""
    mean, prec = 0.0, 0.0
    for o in np.asarray(obs, dtype=float):
        new_prec = prec + 1.0 / noise_var
        mean = (prec * mean + o / noise_var) / new_prec
        prec = new_prec
    return mean, 1.0 / prec


def sequential_mvn_posterior(rows: np.ndarray, cov: np.ndarray):
    """Oracle: vector-location posterior under a flat prior, one row of
    N(mu, cov) evidence at a time."""
    rows = np.asarray(rows, dtype=float)
    p = rows.shape[1]
    prec_total = np.zeros((p, p))
    shift = np.zeros(p)
    prec_one = np.linalg.inv(cov)
    for row in rows:
        prec_total = prec_total + prec_one
        shift = shift + prec_one @ row
    post_cov = np.linalg.inv(prec_total)
    return post_cov @ shift, post_cov


def fresh_rng(tag: int) -> Rng:
    return Rng(987654321, tag)
