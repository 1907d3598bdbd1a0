"""Hierarchical regression model with a missing covariate block.

The generative model is

    y | x ~ N(beta0 + x'beta, sigma2)
    w | x ~ N(psi * 1 + nu * x, tau2 * I)      (surrogate / measurement model)
    x     ~ N(mu_x, Sigma_x)

observed on two subsamples: A carries (y, x, w) complete, B carries (y, w)
with x missing. This module holds the parameter containers and every full
conditional used by the Gibbs engine, exposed as law functions (returning
the exact conditional's parameters) plus draw functions built on them.

Location parameters (beta0, psi, nu, mu_x) carry flat priors and the
variances (sigma2, tau2) Jeffreys priors by default; the law functions
accept optional proper-prior arguments so a forward-simulation correctness
harness can run the identical kernel code under a fully proper model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .stats import (
    NotPositiveDefinite,
    Rng,
    cholesky,
    sample_gamma,
    sample_inverse_gamma,
    sample_mvnormal,
    sample_mvnormal_rows,
    sample_wishart,
    spd_inverse,
    spd_solve,
    symmetrize,
)


class SingularDesign(Exception):
    """A regression design matrix is rank deficient for the requested step."""


class DegenerateBeta(Exception):
    """beta'beta = 0 where a penalty update needs it strictly positive."""


class DegenerateColumn(Exception):
    """A covariate column has no sample variance."""


class NonFinite(Exception):
    """A density evaluation overflowed or met non-finite inputs."""


# Rate floor for the surrogate-noise variance draw when the residual sum of
# squares collapses to zero (w identical to its fitted line); keeps chains
# alive on pathological synthetic inputs.
TAU2_RATE_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Two-subsample data: A = (y_a, x_a, w_a) complete, B = (y_b, w_b).

    All columns counts must agree; entries must be finite.
    """

    y_a: np.ndarray
    x_a: np.ndarray
    w_a: np.ndarray
    y_b: np.ndarray
    w_b: np.ndarray

    def __post_init__(self):
        self.y_a = np.atleast_1d(np.asarray(self.y_a, dtype=float))
        self.x_a = np.atleast_2d(np.asarray(self.x_a, dtype=float))
        self.w_a = np.atleast_2d(np.asarray(self.w_a, dtype=float))
        self.y_b = np.asarray(self.y_b, dtype=float).reshape(-1)
        p = self.x_a.shape[1]
        self.w_b = np.asarray(self.w_b, dtype=float).reshape(-1, p)
        if self.y_a.size < 1:
            raise ValueError("subsample A must contain at least one observation")
        if self.x_a.shape[0] != self.y_a.size or self.w_a.shape != self.x_a.shape:
            raise ValueError("subsample A shapes disagree")
        if self.w_b.shape[0] != self.y_b.size:
            raise ValueError("subsample B shapes disagree")
        for arr in (self.y_a, self.x_a, self.w_a, self.y_b, self.w_b):
            if not np.isfinite(arr).all():
                raise ValueError("dataset contains non-finite entries")

    @property
    def n_a(self) -> int:
        return self.y_a.size

    @property
    def n_b(self) -> int:
        return self.y_b.size

    @property
    def p(self) -> int:
        return self.x_a.shape[1]

    def stacked_y(self) -> np.ndarray:
        return np.concatenate([self.y_a, self.y_b])

    def stacked_x(self, x_b: np.ndarray) -> np.ndarray:
        """Complete covariate matrix with the imputed block appended."""
        x_b = np.asarray(x_b, dtype=float).reshape(-1, self.p)
        if x_b.shape[0] != self.n_b:
            raise ValueError(f"imputed block has {x_b.shape[0]} rows, expected {self.n_b}")
        return np.vstack([self.x_a, x_b]) if self.n_b else self.x_a

    def stacked_w(self) -> np.ndarray:
        return np.vstack([self.w_a, self.w_b]) if self.n_b else self.w_a


@dataclass
class MeParams:
    """Surrogate-model parameters: w = psi + nu * x + tau * noise.

    psi and nu are scalars in the pooled variant or length-p vectors in the
    per-column variant (one intercept/slope pair per covariate).
    """

    psi: float | np.ndarray
    nu: float | np.ndarray
    tau2: float

    def __post_init__(self):
        if np.ndim(self.psi) != np.ndim(self.nu):
            raise ValueError("psi and nu must both be scalar or both vectors")
        if np.ndim(self.psi) == 1:
            self.psi = np.asarray(self.psi, dtype=float)
            self.nu = np.asarray(self.nu, dtype=float)
            if self.psi.shape != self.nu.shape:
                raise ValueError("psi and nu lengths disagree")
        else:
            self.psi = float(self.psi)
            self.nu = float(self.nu)
        self.tau2 = float(self.tau2)
        if not self.tau2 > 0:
            raise ValueError(f"tau2 must be positive, got {self.tau2}")

    @property
    def per_gene(self) -> bool:
        return np.ndim(self.psi) == 1

    def psi_vec(self, p: int) -> np.ndarray:
        return np.asarray(self.psi) if self.per_gene else np.full(p, self.psi)

    def nu_vec(self, p: int) -> np.ndarray:
        return np.asarray(self.nu) if self.per_gene else np.full(p, self.nu)


@dataclass
class Phi:
    """Full parameter state of the hierarchical model."""

    beta0: float
    beta: np.ndarray
    sigma2: float
    me: MeParams
    mu_x: np.ndarray
    sigma_x_inv: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        self.mu_x = np.asarray(self.mu_x, dtype=float).reshape(-1)
        self.sigma_x_inv = np.asarray(self.sigma_x_inv, dtype=float)
        self.beta0 = float(self.beta0)
        self.sigma2 = float(self.sigma2)
        p = self.beta.size
        if self.mu_x.size != p or self.sigma_x_inv.shape != (p, p):
            raise ValueError("parameter dimensions disagree")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def p(self) -> int:
        return self.beta.size

    def copy(self) -> "Phi":
        return Phi(
            beta0=self.beta0,
            beta=self.beta.copy(),
            sigma2=self.sigma2,
            me=MeParams(
                psi=np.copy(self.me.psi) if self.me.per_gene else self.me.psi,
                nu=np.copy(self.me.nu) if self.me.per_gene else self.me.nu,
                tau2=self.me.tau2,
            ),
            mu_x=self.mu_x.copy(),
            sigma_x_inv=self.sigma_x_inv.copy(),
        )


LAMBDA_FIXED = "fixed"
LAMBDA_SAMPLED = "sampled"
LAMBDA_EWIG = "ewig"
SCALE_FIXED_DEFAULT = "fixed_default"
SCALE_EWIG = "ewig"


@dataclass
class Hyper:
    """Shrinkage hyperparameters and how each is handled during sampling.

    lam is the ridge penalty on beta (None when beta has a flat prior);
    Lambda is the diagonal of the adaptive Wishart inverse-scale matrix
    (None when the default data-scaled inverse scale is used).
    """

    lam: float | None = None
    lam_status: str = LAMBDA_FIXED
    Lambda: np.ndarray | None = None
    Lambda_status: str = SCALE_FIXED_DEFAULT

    def __post_init__(self):
        if self.lam is not None:
            self.lam = float(self.lam)
            if self.lam < 0:
                raise ValueError("lam must be nonnegative")
        if self.Lambda is not None:
            self.Lambda = np.asarray(self.Lambda, dtype=float).reshape(-1)
            if not (self.Lambda > 0).all():
                raise ValueError("Lambda diagonal must be strictly positive")


@dataclass
class ImputationLaw:
    """Conditional law of the missing covariate block: row means plus one
    shared covariance."""

    mean: np.ndarray  # (n_b, p)
    cov: np.ndarray  # (p, p)


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------


def _gauss_logpdf_sum(resid: np.ndarray, var: float) -> float:
    n = resid.size
    return -0.5 * n * np.log(2.0 * np.pi * var) - 0.5 * float(np.sum(resid * resid)) / var


def complete_log_likelihood(data: Dataset, x_b: np.ndarray, phi: Phi) -> float:
    """Joint log density of both subsamples treating the imputed block as
    observed: outcome, surrogate and covariate terms for A and for B, all
    with full normalizing constants."""
    p = data.p
    x_b = np.asarray(x_b, dtype=float).reshape(-1, p)
    psi = phi.me.psi_vec(p)
    nu = phi.me.nu_vec(p)
    sign, logdet_prec = np.linalg.slogdet(phi.sigma_x_inv)
    if sign <= 0:
        raise NonFinite("covariate precision matrix is not positive definite")

    total = 0.0
    for x, y, w in ((data.x_a, data.y_a, data.w_a), (x_b, data.y_b, data.w_b)):
        if y.size == 0:
            continue
        total += _gauss_logpdf_sum(y - phi.beta0 - x @ phi.beta, phi.sigma2)
        total += _gauss_logpdf_sum((w - psi[None, :] - x * nu[None, :]).ravel(), phi.me.tau2)
        xc = x - phi.mu_x[None, :]
        quad = float(np.einsum("ij,jk,ik->", xc, phi.sigma_x_inv, xc))
        total += 0.5 * x.shape[0] * (logdet_prec - p * np.log(2.0 * np.pi)) - 0.5 * quad
    if not np.isfinite(total):
        raise NonFinite(f"log likelihood evaluated to {total}")
    return float(total)


# ---------------------------------------------------------------------------
# imputation of the missing covariate block
# ---------------------------------------------------------------------------


def imputation_law(data: Dataset, phi: Phi) -> ImputationLaw:
    """Conditional of each missing covariate row given its outcome,
    surrogate and the current parameters.

    The shared covariance is the inverse of
    beta beta'/sigma2 + diag(nu^2)/tau2 + Sigma_x^{-1}; each mean row
    combines the outcome residual, the surrogate residual and the
    covariate-model mean with those precisions as weights.
    """
    p = data.p
    nu = phi.me.nu_vec(p)
    psi = phi.me.psi_vec(p)
    prec = (
        np.outer(phi.beta, phi.beta) / phi.sigma2
        + np.diag(nu * nu / phi.me.tau2)
        + phi.sigma_x_inv
    )
    cov = spd_inverse(symmetrize(prec))
    # assert positive definiteness of the conditional covariance
    cholesky(cov)
    shift = (
        (data.y_b - phi.beta0)[:, None] * (phi.beta / phi.sigma2)[None, :]
        + (data.w_b - psi[None, :]) * (nu / phi.me.tau2)[None, :]
        + (phi.sigma_x_inv @ phi.mu_x)[None, :]
    )
    return ImputationLaw(mean=shift @ cov, cov=cov)


def step_impute_xb(rng: Rng, data: Dataset, phi: Phi) -> np.ndarray:
    """Draw the missing covariate block, one row per B observation."""
    law = imputation_law(data, phi)
    return sample_mvnormal_rows(rng, law.mean, law.cov)


# ---------------------------------------------------------------------------
# outcome-model conditionals
# ---------------------------------------------------------------------------


def beta_law(data: Dataset, x_b: np.ndarray, phi: Phi, lam: float = 0.0):
    """Gaussian conditional of beta: mean (X'X + lam I)^{-1} X'(y - beta0),
    covariance sigma2 (X'X + lam I)^{-1}, over the stacked design."""
    x = data.stacked_x(x_b)
    yc = data.stacked_y() - phi.beta0
    gram = x.T @ x + lam * np.eye(data.p)
    mean = spd_solve(gram, x.T @ yc)
    cov = phi.sigma2 * spd_inverse(gram)
    return mean, cov


def step_beta_ridge(rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi, lam: float) -> np.ndarray:
    """Draw beta under the ridge prior with penalty lam (lam = 0 recovers
    the flat-prior draw exactly, same stream consumption)."""
    mean, cov = beta_law(data, x_b, phi, lam=lam)
    return sample_mvnormal(rng, mean, cov)


def step_beta_flat(rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi) -> np.ndarray:
    """Draw beta under the flat prior; requires p <= n_a + n_b and an
    invertible stacked design."""
    if data.p > data.n_a + data.n_b:
        raise SingularDesign(
            f"flat beta step needs p <= n_a + n_b ({data.p} > {data.n_a + data.n_b})"
        )
    try:
        return step_beta_ridge(rng, data, x_b, phi, lam=0.0)
    except NotPositiveDefinite as exc:
        raise SingularDesign(f"stacked design is rank deficient: {exc}") from exc


def beta0_law(
    data: Dataset,
    x_b: np.ndarray,
    phi: Phi,
    prior_mean: float | None = None,
    prior_var: float | None = None,
):
    """Normal conditional of the intercept. Flat prior by default:
    mean of (y - x'beta) with variance sigma2/n."""
    resid = data.stacked_y() - data.stacked_x(x_b) @ phi.beta
    n = resid.size
    if prior_var is None:
        return float(resid.mean()), phi.sigma2 / n
    prec = n / phi.sigma2 + 1.0 / prior_var
    mean = (resid.sum() / phi.sigma2 + (prior_mean or 0.0) / prior_var) / prec
    return float(mean), 1.0 / prec


def step_beta0(rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi, **prior) -> float:
    mean, var = beta0_law(data, x_b, phi, **prior)
    return float(mean + np.sqrt(var) * rng.generator.standard_normal())


def sigma2_law(
    data: Dataset,
    x_b: np.ndarray,
    phi: Phi,
    ridge_lambda: float | None = None,
    prior_shape: float = 0.0,
    prior_rate: float = 0.0,
):
    """Inverse-Gamma conditional of the outcome variance.

    Flat-beta methods: IG(n/2, RSS/2). Ridge methods fold the beta prior's
    sigma2 factor in: IG((n+p)/2, (RSS + lam * beta'beta)/2). The optional
    prior (shape, rate) defaults to the Jeffreys limit (0, 0).
    """
    resid = data.stacked_y() - phi.beta0 - data.stacked_x(x_b) @ phi.beta
    n = resid.size
    rss = float(resid @ resid)
    if ridge_lambda is None:
        return prior_shape + 0.5 * n, prior_rate + 0.5 * rss
    penalty = float(ridge_lambda) * float(phi.beta @ phi.beta)
    return prior_shape + 0.5 * (n + data.p), prior_rate + 0.5 * (rss + penalty)


def step_sigma2(rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi, **kwargs) -> float:
    shape, rate = sigma2_law(data, x_b, phi, **kwargs)
    return float(sample_inverse_gamma(rng, shape, rate))


# ---------------------------------------------------------------------------
# surrogate-model conditionals
# ---------------------------------------------------------------------------


def intercept_slope_law(
    x: np.ndarray,
    w: np.ndarray,
    tau2: float,
    prior_mean: np.ndarray | None = None,
    prior_var: np.ndarray | None = None,
):
    """Bivariate normal conditional of (intercept, slope) for regressing w
    on x with known error variance tau2 and flat (or diagonal normal)
    priors."""
    x = np.asarray(x, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    n = x.size
    sx = x.sum()
    ztz = np.array([[n, sx], [sx, float(x @ x)]])
    ztw = np.array([w.sum(), float(x @ w)])
    try:
        if prior_var is None:
            mean = spd_solve(ztz, ztw)
            cov = tau2 * spd_inverse(ztz)
        else:
            pv = np.asarray(prior_var, dtype=float)
            pm = np.zeros(2) if prior_mean is None else np.asarray(prior_mean, dtype=float)
            prec = ztz / tau2 + np.diag(1.0 / pv)
            cov = spd_inverse(prec)
            mean = cov @ (ztw / tau2 + pm / pv)
    except NotPositiveDefinite as exc:
        raise SingularDesign(f"constant covariate column in surrogate regression: {exc}") from exc
    return mean, cov


def step_me_params(
    rng: Rng,
    data: Dataset,
    x_b: np.ndarray,
    phi: Phi,
    prior_mean: np.ndarray | None = None,
    prior_var: np.ndarray | None = None,
    tau2_prior_shape: float = 0.0,
    tau2_prior_rate: float = 0.0,
) -> MeParams:
    """Draw the surrogate-model parameters.

    Pooled variant: one (psi, nu) pair from regressing every w entry on
    the matching x entry; per-column variant: an independent pair per
    covariate. Either way tau2 then follows an Inverse-Gamma with the
    residual sum of squares from the fresh (psi, nu)."""
    x = data.stacked_x(x_b)
    w = data.stacked_w()
    n, p = x.shape
    tau2 = phi.me.tau2
    if phi.me.per_gene:
        psi = np.empty(p)
        nu = np.empty(p)
        sse = 0.0
        for j in range(p):
            mean, cov = intercept_slope_law(x[:, j], w[:, j], tau2, prior_mean, prior_var)
            psi[j], nu[j] = sample_mvnormal(rng, mean, cov)
            r = w[:, j] - psi[j] - nu[j] * x[:, j]
            sse += float(r @ r)
        new_psi: float | np.ndarray = psi
        new_nu: float | np.ndarray = nu
    else:
        mean, cov = intercept_slope_law(x.ravel(), w.ravel(), tau2, prior_mean, prior_var)
        psi_s, nu_s = sample_mvnormal(rng, mean, cov)
        r = (w - psi_s - nu_s * x).ravel()
        sse = float(r @ r)
        new_psi, new_nu = float(psi_s), float(nu_s)
    rate = tau2_prior_rate + 0.5 * sse
    if rate < TAU2_RATE_FLOOR:
        warnings.warn(
            "surrogate residual sum of squares is zero; flooring the tau2 rate",
            RuntimeWarning,
            stacklevel=2,
        )
        rate = TAU2_RATE_FLOOR
    new_tau2 = float(sample_inverse_gamma(rng, tau2_prior_shape + 0.5 * n * p, rate))
    return MeParams(psi=new_psi, nu=new_nu, tau2=new_tau2)


# ---------------------------------------------------------------------------
# covariate-model conditionals
# ---------------------------------------------------------------------------


def mu_x_law(
    data: Dataset,
    x_b: np.ndarray,
    phi: Phi,
    prior_mean: float | None = None,
    prior_var: float | None = None,
):
    """Normal conditional of the covariate mean: N(xbar, Sigma_x / n)
    under the flat prior."""
    x = data.stacked_x(x_b)
    n = x.shape[0]
    xbar = x.mean(axis=0)
    if prior_var is None:
        cov = spd_inverse(phi.sigma_x_inv) / n
        return xbar, cov
    prec = n * phi.sigma_x_inv + np.eye(data.p) / prior_var
    cov = spd_inverse(prec)
    mean = cov @ (phi.sigma_x_inv @ (n * xbar) + (prior_mean or 0.0) / prior_var)
    return mean, cov


def step_mu_x(rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi, **prior) -> np.ndarray:
    mean, cov = mu_x_law(data, x_b, phi, **prior)
    return sample_mvnormal(rng, mean, cov)


def sigma_x_law(data: Dataset, x_b: np.ndarray, phi: Phi, inv_scale: np.ndarray):
    """Wishart conditional of the covariate precision: degrees of freedom
    3p + n and scale (inv_scale + scatter_A + scatter_B)^{-1}, scatters
    taken about the current mu_x."""
    xa_c = data.x_a - phi.mu_x[None, :]
    total = np.asarray(inv_scale, dtype=float) + xa_c.T @ xa_c
    if data.n_b:
        xb_c = np.asarray(x_b, dtype=float).reshape(-1, data.p) - phi.mu_x[None, :]
        total = total + xb_c.T @ xb_c
    dof = 3.0 * data.p + data.n_a + data.n_b
    return dof, spd_inverse(symmetrize(total))


def step_sigma_x_inv(
    rng: Rng, data: Dataset, x_b: np.ndarray, phi: Phi, inv_scale: np.ndarray
) -> np.ndarray:
    dof, scale = sigma_x_law(data, x_b, phi, inv_scale)
    return sample_wishart(rng, dof, scale)


def default_sigma_x_prior(data: Dataset):
    """Data-scaled Wishart prior for the covariate precision: 3p degrees
    of freedom, inverse scale (2p-1) * diag of the sample variances of the
    complete-subsample covariates (so the implied prior mean of the
    covariate covariance is that diagonal)."""
    if data.n_a < 2:
        raise DegenerateColumn("need at least two complete rows to estimate column variances")
    var = data.x_a.var(axis=0, ddof=1)
    if not (np.isfinite(var).all() and (var > 0).all()):
        raise DegenerateColumn("a covariate column of subsample A has zero sample variance")
    p = data.p
    return 3.0 * p, (2.0 * p - 1.0) * np.diag(var)


# ---------------------------------------------------------------------------
# shrinkage-penalty updates
# ---------------------------------------------------------------------------


def lambda_law(phi: Phi):
    """Gamma conditional of the ridge penalty under its scale-invariant
    hyperprior: shape p/2, rate beta'beta / (2 sigma2)."""
    bb = float(phi.beta @ phi.beta)
    if bb == 0.0:
        raise DegenerateBeta("beta'beta = 0: penalty conditional is degenerate")
    return 0.5 * phi.p, 0.5 * bb / phi.sigma2


def step_lambda(rng: Rng, phi: Phi) -> float:
    shape, rate = lambda_law(phi)
    return float(sample_gamma(rng, shape, rate))


def ewig_update_lambda(betas: np.ndarray, sigma2s: np.ndarray) -> float:
    """Empirical-Bayes ridge-penalty update from a block of K draws:
    p divided by the block mean of beta'beta / sigma2."""
    betas = np.asarray(betas, dtype=float)
    sigma2s = np.asarray(sigma2s, dtype=float).reshape(-1)
    if betas.ndim != 2 or betas.shape[0] != sigma2s.size or sigma2s.size < 1:
        raise ValueError("need K >= 1 beta draws with matching sigma2 draws")
    ratios = np.einsum("kj,kj->k", betas, betas) / sigma2s
    mean = float(ratios.mean())
    if mean == 0.0:
        raise DegenerateBeta("all beta draws in the block are zero")
    return betas.shape[1] / mean


def ewig_update_Lambda(sigma_x_inv_draws: np.ndarray) -> np.ndarray:
    """Empirical-Bayes update of the diagonal Wishart inverse scale from a
    block of K precision draws: 3p over the block mean of each diagonal
    entry (off-diagonals are constrained to zero)."""
    draws = np.asarray(sigma_x_inv_draws, dtype=float)
    if draws.ndim != 3 or draws.shape[0] < 1 or draws.shape[1] != draws.shape[2]:
        raise ValueError("expected a (K, p, p) stack of precision draws")
    p = draws.shape[1]
    return ewig_update_Lambda_from_diagonals(draws[:, np.arange(p), np.arange(p)])


def ewig_update_Lambda_from_diagonals(diagonals: np.ndarray) -> np.ndarray:
    """Same update from the (K, p) diagonals alone."""
    diagonals = np.asarray(diagonals, dtype=float)
    return 3.0 * diagonals.shape[1] / diagonals.mean(axis=0)
