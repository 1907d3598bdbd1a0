"""Bayesian shrinkage regression with a partially missing covariate block.

Fits a linear outcome model y = b0 + x'b + s*eps where the covariates x are
observed only on a complete subsample (A) and a noisy surrogate w is observed
everywhere. Missing covariate rows are imputed inside a Gibbs sampler, with
five shrinkage configurations (flat, Bayesian ridge with sampled / EB /
fixed penalty, adaptive Wishart scale) plus a ridge/GCV baseline and a
simulation harness for prediction-error and coverage studies.
"""

from .stats import Rng
from .model import Dataset, MeParams, Phi, Hyper
from .sampler import Method, ChainConfig, ChainOutput, run_chain
from .inference import (
    PosteriorSummary,
    beta_pm,
    beta_ppm,
    coverage,
    mspe,
    prediction_interval,
    predictive_draws,
    summarize_chain,
)
from .ridge import RidgeFit, gcv_select, ridge_fit
from .simlab import SimConfig, beta_truth, generate_dataset, run_experiment, sigma2_from_r2

__all__ = [
    "Rng",
    "Dataset",
    "MeParams",
    "Phi",
    "Hyper",
    "Method",
    "ChainConfig",
    "ChainOutput",
    "run_chain",
    "PosteriorSummary",
    "beta_pm",
    "beta_ppm",
    "coverage",
    "mspe",
    "prediction_interval",
    "predictive_draws",
    "summarize_chain",
    "RidgeFit",
    "gcv_select",
    "ridge_fit",
    "SimConfig",
    "beta_truth",
    "generate_dataset",
    "run_experiment",
    "sigma2_from_r2",
]

__version__ = "0.1.0"
