"""Simulation study: data generation, replicate orchestration, aggregation.

Each replicate draws covariates from an equicorrelated Gaussian, outcomes
from the linear model with the noise level set by a target R-squared, and
surrogates from the measurement model at a chosen noise level tau. Three
optional violations stress robustness: skewed outcome noise (shifted
exponential), a quadratic surrogate model, and a three-component mixture
for the covariates. Fitting always uses the standard (non-violated) model.

Every replicate owns derived random streams keyed by (replicate, method),
so results do not depend on execution order and methods share the same
generated data within a replicate (common random numbers).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import inference, ridge
from .model import Dataset, MeParams, Phi
from .sampler import ChainConfig, ChainError, DimensionError, Method, run_chain
from .stats import Rng, cholesky, spd_inverse


class PatternDimensionMismatch(Exception):
    """A named coefficient pattern does not exist at the requested length."""


VIOLATIONS = ("none", "skewed_error", "quadratic_me", "mixture_x")
BAYES_METHODS = tuple(m.value for m in Method)
EXTRA_METHODS = ("ridg", "truth")

# stream-id prefixes: data generation, chain sampling, predictive evaluation
_STREAM_DATA = 0
_STREAM_CHAIN = 1
_STREAM_EVAL = 2


@dataclass
class SimConfig:
    n_a: int = 50
    n_b: int = 400
    p: int = 99
    beta_pattern: str | tuple | list | np.ndarray = "diffuse"
    r2: float = 0.4
    tau: float = 1.0
    rho: float = 0.15
    psi: float = 0.0
    nu: float = 1.0
    violation: str = "none"
    replicates: int = 250
    validation_n: int = 1000
    seed: int = 0
    methods: tuple = BAYES_METHODS + ("ridg",)
    chain: ChainConfig = field(default_factory=lambda: ChainConfig(burn_in=2500, stored=1000, k=100))

    def __post_init__(self):
        if not 0.0 < self.r2 < 1.0:
            raise ValueError("r2 must lie in (0, 1)")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.violation not in VIOLATIONS:
            raise ValueError(f"unknown violation {self.violation!r}; expected one of {VIOLATIONS}")
        unknown = [m for m in self.methods if m not in BAYES_METHODS + EXTRA_METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}")
        self.methods = tuple(self.methods)

    def beta(self) -> np.ndarray:
        return beta_truth(self.beta_pattern, self.p)

    def sigma_x(self) -> np.ndarray:
        return equicorrelation(self.p, self.rho)

    def sigma2(self) -> float:
        return sigma2_from_r2(self.beta(), self.sigma_x(), self.r2)


def beta_truth(pattern, p: int) -> np.ndarray:
    """Coefficient vectors used by the study.

    "diffuse": j/100 for j = -49..49 (includes the zero at j = 0; 99
    coefficients). "concentrated": eleven blocks of eight 0.1s followed by
    a single 1.0 (99 coefficients). "concentrated_scaled": the same block
    pattern tiled and truncated to any p. A sequence is taken verbatim.
    """
    if isinstance(pattern, str):
        name = pattern.strip().lower()
        if name == "diffuse":
            if p != 99:
                raise PatternDimensionMismatch(f"diffuse pattern has 99 entries, requested p={p}")
            return np.arange(-49, 50) / 100.0
        if name == "concentrated":
            if p != 99:
                raise PatternDimensionMismatch(
                    f"concentrated pattern has 99 entries, requested p={p}"
                )
            return np.tile(np.array([0.1] * 8 + [1.0]), 11)
        if name == "concentrated_scaled":
            return concentrated_scaled(p)
        raise PatternDimensionMismatch(f"unknown pattern {pattern!r}")
    vec = np.asarray(pattern, dtype=float).ravel()
    if vec.size != p:
        raise PatternDimensionMismatch(f"custom pattern has {vec.size} entries, requested p={p}")
    return vec


def concentrated_scaled(p: int) -> np.ndarray:
    """Block pattern (eight 0.1s then one 1.0) tiled out to length p."""
    if p < 1:
        raise PatternDimensionMismatch("p must be positive")
    block = np.array([0.1] * 8 + [1.0])
    return np.tile(block, p // 9 + 1)[:p]


def equicorrelation(p: int, rho: float) -> np.ndarray:
    """Unit-variance covariance with constant off-diagonal correlation."""
    if not -1.0 / max(p - 1, 1) < rho < 1.0:
        raise ValueError(f"rho={rho} is not positive definite at p={p}")
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


def sigma2_from_r2(beta: np.ndarray, sigma_x: np.ndarray, r2: float) -> float:
    """Outcome noise variance hitting a target R-squared:
    sigma2 = beta'S beta * (1 - R2) / R2."""
    if not 0.0 < r2 < 1.0:
        raise ValueError("r2 must lie in (0, 1)")
    signal = float(np.asarray(beta) @ np.asarray(sigma_x) @ np.asarray(beta))
    return signal * (1.0 - r2) / r2


def _draw_x(rng: Rng, n: int, chol_sigma_x: np.ndarray, p: int, mixture: bool) -> np.ndarray:
    z = rng.generator.standard_normal((n, p))
    x = z @ chol_sigma_x.T
    if mixture:
        comp = rng.generator.integers(1, 4, size=n)
        x = x + 3.0 * ((comp == 2).astype(float) - (comp == 3).astype(float))[:, None]
    return x


def _draw_eps(rng: Rng, n: int, skewed: bool) -> np.ndarray:
    if skewed:
        return rng.generator.standard_gamma(1.0, size=n) - 1.0
    return rng.generator.standard_normal(n)


def _draw_w(rng: Rng, x: np.ndarray, cfg: SimConfig) -> np.ndarray:
    base = x * x if cfg.violation == "quadratic_me" else x
    noise = rng.generator.standard_normal(x.shape)
    return cfg.psi + cfg.nu * base + cfg.tau * noise


def generate_dataset(rng: Rng, cfg: SimConfig):
    """One replicate: (dataset, generating parameters, validation pairs).

    Validation pairs come from the same regime, violations included.
    """
    beta = cfg.beta()
    sigma_x = cfg.sigma_x()
    sigma2 = sigma2_from_r2(beta, sigma_x, cfg.r2)
    sd = np.sqrt(sigma2)
    chol_sx = cholesky(sigma_x)
    mixture = cfg.violation == "mixture_x"
    skewed = cfg.violation == "skewed_error"

    x_a = _draw_x(rng, cfg.n_a, chol_sx, cfg.p, mixture)
    x_b = _draw_x(rng, cfg.n_b, chol_sx, cfg.p, mixture)
    y_a = x_a @ beta + sd * _draw_eps(rng, cfg.n_a, skewed)
    y_b = x_b @ beta + sd * _draw_eps(rng, cfg.n_b, skewed)
    w_a = _draw_w(rng, x_a, cfg)
    w_b = _draw_w(rng, x_b, cfg)
    data = Dataset(y_a=y_a, x_a=x_a, w_a=w_a, y_b=y_b, w_b=w_b)

    x_val = _draw_x(rng, cfg.validation_n, chol_sx, cfg.p, mixture)
    y_val = x_val @ beta + sd * _draw_eps(rng, cfg.validation_n, skewed)

    truth = Phi(
        beta0=0.0,
        beta=beta,
        sigma2=sigma2,
        me=MeParams(psi=cfg.psi, nu=cfg.nu, tau2=cfg.tau**2),
        mu_x=np.zeros(cfg.p),
        sigma_x_inv=spd_inverse(sigma_x),
    )
    return data, truth, (y_val, x_val)


@dataclass
class ReplicateResult:
    method: str
    tau: float
    replicate: int
    seed: int
    mspe_ppm: float | None
    mspe_pm: float | None
    coverage: float | None
    width: float | None
    wall_time_s: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ExperimentTable:
    config: SimConfig
    rows: list

    def aggregate(self) -> dict:
        """Per-method summary over successful replicates."""
        out: dict = {}
        for method in self.config.methods:
            rows = [r for r in self.rows if r.method == method and r.ok]
            failed = [r for r in self.rows if r.method == method and not r.ok]
            if not rows:
                out[method] = {
                    "mspe_mean": None,
                    "mspe_se": None,
                    "coverage_mean": None,
                    "width_mean": None,
                    "mspe_pm_mean": None,
                    "replicates_used": 0,
                    "replicates_failed": len(failed),
                }
                continue
            mspe_vals = np.array([r.mspe_ppm for r in rows])
            covs = [r.coverage for r in rows if r.coverage is not None]
            widths = [r.width for r in rows if r.width is not None]
            pms = [r.mspe_pm for r in rows if r.mspe_pm is not None]
            out[method] = {
                "mspe_mean": float(mspe_vals.mean()),
                "mspe_se": float(mspe_vals.std(ddof=1) / np.sqrt(len(rows))) if len(rows) > 1 else 0.0,
                "coverage_mean": float(np.mean(covs)) if covs else None,
                "width_mean": float(np.mean(widths)) if widths else None,
                "mspe_pm_mean": float(np.mean(pms)) if pms else None,
                "replicates_used": len(rows),
                "replicates_failed": len(failed),
            }
        return out


def run_replicate(cfg: SimConfig, rep: int) -> list:
    """All requested methods on one generated replicate. Pure function of
    (cfg, rep): safe to run replicates in any order or in parallel."""
    data_rng = Rng(cfg.seed, (_STREAM_DATA, rep))
    data, truth, (y_val, x_val) = generate_dataset(data_rng, cfg)
    rows = []
    for m_idx, method in enumerate(cfg.methods):
        t0 = time.perf_counter()
        row = ReplicateResult(
            method=method,
            tau=cfg.tau,
            replicate=rep,
            seed=cfg.seed,
            mspe_ppm=None,
            mspe_pm=None,
            coverage=None,
            width=None,
            wall_time_s=0.0,
        )
        try:
            if method == "truth":
                row.mspe_ppm = inference.mspe(truth.beta0, truth.beta, y_val, x_val)
            elif method == "ridg":
                fit = ridge.gcv_select(data.y_a, data.x_a)
                row.mspe_ppm = inference.mspe(fit.beta0_hat, fit.beta_hat, y_val, x_val)
            else:
                chain_cfg = replace(
                    cfg.chain, seed=cfg.seed, stream=(_STREAM_CHAIN, rep, m_idx)
                )
                chain = run_chain(data, Method.parse(method), chain_cfg)
                summary = inference.summarize_chain(chain)
                row.mspe_ppm = inference.mspe(summary.beta0_hat, summary.beta_ppm, y_val, x_val)
                row.mspe_pm = inference.mspe(summary.beta0_hat, summary.beta_pm, y_val, x_val)
                eval_rng = Rng(cfg.seed, (_STREAM_EVAL, rep, m_idx))
                draws = inference.predictive_draws(eval_rng, chain, x_val)
                row.coverage, row.width = inference.coverage(draws, y_val)
        except (ChainError, DimensionError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        row.wall_time_s = time.perf_counter() - t0
        rows.append(row)
    return rows


def run_experiment(cfg: SimConfig) -> ExperimentTable:
    """Run every replicate and collect the per-(method, replicate) table."""
    rows = []
    for rep in range(cfg.replicates):
        rows.extend(run_replicate(cfg, rep))
    return ExperimentTable(config=cfg, rows=rows)


def desk_profile(**overrides) -> SimConfig:
    """Small configuration that finishes on a desktop in minutes while
    preserving the study's qualitative method ordering."""
    base = dict(
        n_a=25,
        n_b=100,
        p=20,
        beta_pattern="concentrated_scaled",
        r2=0.4,
        tau=1.0,
        rho=0.15,
        replicates=20,
        validation_n=500,
        chain=ChainConfig(burn_in=500, stored=300, k=100),
    )
    base.update(overrides)
    return SimConfig(**base)


def paper_profile(**overrides) -> SimConfig:
    """Full-scale configuration (hours of runtime)."""
    base = dict(
        n_a=50,
        n_b=400,
        p=99,
        beta_pattern="diffuse",
        r2=0.4,
        tau=1.0,
        rho=0.15,
        replicates=250,
        validation_n=1000,
        chain=ChainConfig(burn_in=2500, stored=1000, k=100),
    )
    base.update(overrides)
    return SimConfig(**base)
