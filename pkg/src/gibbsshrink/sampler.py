"""Gibbs engine composing the conditional kernels into five methods.

Method overview
---------------
==========  ===========  ==================  =====================  =============
method      beta prior   penalty handling    precision inv. scale   p <= n needed
==========  ===========  ==================  =====================  =============
vanilla     flat         none                data-scaled default    yes
hierbetas   ridge        sampled each sweep  data-scaled default    no
ebbetas     ridge        EB every K sweeps   data-scaled default    no
ebsigmax    flat         none                EB-updated diagonal    yes
ebboth      ridge        EB every K sweeps   EB-updated diagonal    no
==========  ===========  ==================  =====================  =============

One sweep updates, in order: the imputed covariate block, beta, the
intercept, the outcome variance, the surrogate-model parameters, the
covariate mean, the covariate precision, and finally the shrinkage
hyperparameters per the table. Empirical-Bayes (EB) updates replace the
penalty with its marginal-likelihood maximizer estimated from the previous
K draws; they run during burn-in (to stabilize) and keep running after.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import model as mdl
from . import stats as stats_errors
from .model import Dataset, Hyper, MeParams, Phi
from .stats import Rng


class DimensionError(Exception):
    """Method requires p <= n_a + n_b and the data violate it."""


class ChainError(Exception):
    """A kernel failed mid-chain; carries the iteration index."""

    def __init__(self, iteration: int, original: Exception):
        self.iteration = iteration
        self.original = original
        super().__init__(f"iteration {iteration}: {type(original).__name__}: {original}")


class Method(Enum):
    VANILLA = "vanilla"
    HIERBETAS = "hierbetas"
    EBBETAS = "ebbetas"
    EBSIGMAX = "ebsigmax"
    EBBOTH = "ebboth"

    @property
    def ridge_beta(self) -> bool:
        return self in (Method.HIERBETAS, Method.EBBETAS, Method.EBBOTH)

    @property
    def samples_lambda(self) -> bool:
        return self is Method.HIERBETAS

    @property
    def ewig_lambda(self) -> bool:
        return self in (Method.EBBETAS, Method.EBBOTH)

    @property
    def adaptive_scale(self) -> bool:
        return self in (Method.EBSIGMAX, Method.EBBOTH)

    @property
    def needs_full_rank(self) -> bool:
        return self in (Method.VANILLA, Method.EBSIGMAX)

    @classmethod
    def parse(cls, name: str) -> "Method":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {name!r}; expected one of {valid}") from None


@dataclass
class InitPolicy:
    """Chain starting point. Fields left as None use moment-matched
    defaults: beta = 0, beta0 = mean(y), sigma2 = var(y), psi = 0, nu = 1,
    tau2 = var(w_a - x_a) (fallback 1), mu_x = column means of x_a,
    covariate precision = 1 / column variances of x_a."""

    phi: Phi | None = None
    lam: float = 1.0
    Lambda: np.ndarray | None = None


@dataclass
class ChainConfig:
    burn_in: int = 2500
    stored: int = 1000
    k: int = 100
    seed: int = 0
    stream: int | tuple[int, ...] = 0
    me_variant: str = "scalar"  # "scalar" or "per_gene"
    init: InitPolicy = field(default_factory=InitPolicy)
    freeze_hyper: bool = False  # hold penalties at their initial values

    def __post_init__(self):
        if self.burn_in < 0 or self.stored < 1 or self.k < 1:
            raise ValueError("need burn_in >= 0, stored >= 1, k >= 1")
        if self.me_variant not in ("scalar", "per_gene"):
            raise ValueError(f"unknown surrogate-model variant {self.me_variant!r}")


@dataclass
class ChainOutput:
    """Post-burn-in draws plus penalty traces and provenance."""

    method: Method
    beta0: np.ndarray  # (T,)
    beta: np.ndarray  # (T, p)
    sigma2: np.ndarray  # (T,)
    psi: np.ndarray  # (T,) or (T, p)
    nu: np.ndarray  # (T,) or (T, p)
    tau2: np.ndarray  # (T,)
    mu_x: np.ndarray  # (T, p)
    sigma_x_inv: np.ndarray  # (T, p, p)
    xb_mean: np.ndarray | None  # (n_b, p) running mean of imputed block
    hyper: Hyper
    lam_trace: np.ndarray | None  # (burn_in + T,) including burn-in
    Lambda_trace: np.ndarray | None  # (n_updates, p)
    seed: int
    stream: tuple[int, ...]
    wall_time_s: float

    @property
    def n_draws(self) -> int:
        return self.beta0.size

    @property
    def p(self) -> int:
        return self.beta.shape[1]

    def phi_draw(self, t: int) -> Phi:
        """Reconstruct the full parameter state of stored draw t."""
        per_gene = self.psi.ndim == 2
        me = MeParams(
            psi=self.psi[t] if per_gene else float(self.psi[t]),
            nu=self.nu[t] if per_gene else float(self.nu[t]),
            tau2=float(self.tau2[t]),
        )
        return Phi(
            beta0=float(self.beta0[t]),
            beta=self.beta[t],
            sigma2=float(self.sigma2[t]),
            me=me,
            mu_x=self.mu_x[t],
            sigma_x_inv=self.sigma_x_inv[t],
        )


def default_init(data: Dataset, me_variant: str) -> Phi:
    """Moment-matched starting state (see InitPolicy)."""
    y = data.stacked_y()
    sigma2 = float(y.var(ddof=1)) if y.size > 1 else 1.0
    if not sigma2 > 0:
        sigma2 = 1.0
    resid = (data.w_a - data.x_a).ravel()
    tau2 = float(resid.var(ddof=1)) if resid.size > 1 else 1.0
    if not (np.isfinite(tau2) and tau2 > 0):
        tau2 = 1.0
    var_x = data.x_a.var(axis=0, ddof=1) if data.n_a > 1 else np.ones(data.p)
    if not ((var_x > 0).all() and np.isfinite(var_x).all()):
        raise mdl.DegenerateColumn("zero-variance covariate column in subsample A")
    p = data.p
    if me_variant == "per_gene":
        me = MeParams(psi=np.zeros(p), nu=np.ones(p), tau2=tau2)
    else:
        me = MeParams(psi=0.0, nu=1.0, tau2=tau2)
    return Phi(
        beta0=float(y.mean()),
        beta=np.zeros(p),
        sigma2=sigma2,
        me=me,
        mu_x=data.x_a.mean(axis=0),
        sigma_x_inv=np.diag(1.0 / var_x),
    )


def default_Lambda(data: Dataset) -> np.ndarray:
    """Starting diagonal for the adaptive inverse scale, consistent with
    the EB update evaluated at the starting covariate precision."""
    var_x = data.x_a.var(axis=0, ddof=1)
    return 3.0 * data.p * var_x


_KERNEL_ERRORS = (
    mdl.SingularDesign,
    mdl.DegenerateBeta,
    mdl.DegenerateColumn,
    mdl.NonFinite,
    stats_errors.NotPositiveDefinite,
    stats_errors.InvalidParameter,
    stats_errors.DegreesOfFreedomTooSmall,
)


def run_chain(data: Dataset, method: Method, config: ChainConfig) -> ChainOutput:
    """Run one Gibbs chain and return its stored draws.

    Raises DimensionError up front for methods that need p <= n_a + n_b,
    and ChainError (with the iteration index) if any kernel fails
    mid-stream. With config.freeze_hyper the penalties stay at their
    initial values, which reduces every method to plain data augmentation
    with fixed hyperparameters.
    """
    if method.needs_full_rank and data.p > data.n_a + data.n_b:
        raise DimensionError(
            f"{method.value} needs p <= n_a + n_b ({data.p} > {data.n_a + data.n_b})"
        )
    uses_ewig = (method.ewig_lambda or method.adaptive_scale) and not config.freeze_hyper
    if uses_ewig and config.burn_in % config.k != 0:
        raise ValueError("EB-updated methods need burn_in to be a multiple of k")

    t_start = time.perf_counter()
    rng = Rng(config.seed, config.stream)
    phi = config.init.phi.copy() if config.init.phi is not None else default_init(data, config.me_variant)
    lam = float(config.init.lam)
    if method.adaptive_scale:
        Lam = np.asarray(config.init.Lambda, dtype=float) if config.init.Lambda is not None else default_Lambda(data)
    else:
        Lam = None
    fixed_inv_scale = None
    if not method.adaptive_scale:
        _, fixed_inv_scale = mdl.default_sigma_x_prior(data)

    n_b, p = data.n_b, data.p
    total = config.burn_in + config.stored
    stored = config.stored
    per_gene = config.me_variant == "per_gene"

    out_beta0 = np.empty(stored)
    out_beta = np.empty((stored, p))
    out_sigma2 = np.empty(stored)
    out_psi = np.empty((stored, p)) if per_gene else np.empty(stored)
    out_nu = np.empty_like(out_psi)
    out_tau2 = np.empty(stored)
    out_mu_x = np.empty((stored, p))
    out_sxi = np.empty((stored, p, p))
    xb_sum = np.zeros((n_b, p)) if n_b else None

    track_lambda = method.ridge_beta
    lam_trace = np.empty(total) if track_lambda else None
    Lambda_trace: list[np.ndarray] = []

    block_beta = np.empty((config.k, p))
    block_sigma2 = np.empty(config.k)
    block_sxi_diag = np.empty((config.k, p))

    x_b = np.empty((0, p))
    for it in range(total):
        try:
            if n_b:
                x_b = mdl.step_impute_xb(rng, data, phi)
            if method.ridge_beta:
                phi.beta = mdl.step_beta_ridge(rng, data, x_b, phi, lam=lam)
            else:
                phi.beta = mdl.step_beta_flat(rng, data, x_b, phi)
            phi.beta0 = mdl.step_beta0(rng, data, x_b, phi)
            phi.sigma2 = mdl.step_sigma2(
                rng, data, x_b, phi, ridge_lambda=lam if method.ridge_beta else None
            )
            phi.me = mdl.step_me_params(rng, data, x_b, phi)
            phi.mu_x = mdl.step_mu_x(rng, data, x_b, phi)
            inv_scale = np.diag(Lam) if method.adaptive_scale else fixed_inv_scale
            phi.sigma_x_inv = mdl.step_sigma_x_inv(rng, data, x_b, phi, inv_scale)

            if not config.freeze_hyper:
                if method.samples_lambda:
                    lam = mdl.step_lambda(rng, phi)
                if uses_ewig:
                    slot = it % config.k
                    block_beta[slot] = phi.beta
                    block_sigma2[slot] = phi.sigma2
                    block_sxi_diag[slot] = np.diagonal(phi.sigma_x_inv)
                    if (it + 1) % config.k == 0:
                        if method.ewig_lambda:
                            lam = mdl.ewig_update_lambda(block_beta, block_sigma2)
                        if method.adaptive_scale:
                            Lam = mdl.ewig_update_Lambda_from_diagonals(block_sxi_diag)
                            Lambda_trace.append(Lam.copy())
        except _KERNEL_ERRORS as exc:
            raise ChainError(it, exc) from exc

        if track_lambda:
            lam_trace[it] = lam
        if it >= config.burn_in:
            t = it - config.burn_in
            out_beta0[t] = phi.beta0
            out_beta[t] = phi.beta
            out_sigma2[t] = phi.sigma2
            out_psi[t] = phi.me.psi
            out_nu[t] = phi.me.nu
            out_tau2[t] = phi.me.tau2
            out_mu_x[t] = phi.mu_x
            out_sxi[t] = phi.sigma_x_inv
            if n_b:
                xb_sum += x_b

    if method.ridge_beta:
        lam_status = mdl.LAMBDA_SAMPLED if method.samples_lambda else (
            mdl.LAMBDA_EWIG if method.ewig_lambda else mdl.LAMBDA_FIXED
        )
        hyper = Hyper(
            lam=lam,
            lam_status=lam_status,
            Lambda=Lam,
            Lambda_status=mdl.SCALE_EWIG if method.adaptive_scale else mdl.SCALE_FIXED_DEFAULT,
        )
    else:
        hyper = Hyper(
            lam=None,
            lam_status=mdl.LAMBDA_FIXED,
            Lambda=Lam,
            Lambda_status=mdl.SCALE_EWIG if method.adaptive_scale else mdl.SCALE_FIXED_DEFAULT,
        )

    return ChainOutput(
        method=method,
        beta0=out_beta0,
        beta=out_beta,
        sigma2=out_sigma2,
        psi=out_psi,
        nu=out_nu,
        tau2=out_tau2,
        mu_x=out_mu_x,
        sigma_x_inv=out_sxi,
        xb_mean=xb_sum / stored if n_b else None,
        hyper=hyper,
        lam_trace=lam_trace,
        Lambda_trace=np.array(Lambda_trace) if Lambda_trace else None,
        seed=config.seed,
        stream=rng.stream,
        wall_time_s=time.perf_counter() - t_start,
    )
