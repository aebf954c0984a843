"""Generalized Ramos-Louzada lifetime distribution: density, sampling,
eight parameter estimators, goodness-of-fit and a Monte Carlo study."""

from .distribution import (
    GrlParams,
    MomentSet,
    Sample,
    cdf,
    hazard,
    log_pdf,
    log_survival,
    moments,
    order_stat_cdf,
    order_stat_pdf,
    pdf,
    quantile,
    raw_moment,
    sample_inverse,
    sample_mixture,
    survival,
    ttt_transform,
)
from .estimators import (
    EstimationOptions,
    EstimationResult,
    Method,
    estimate,
    log_likelihood,
    observed_information,
    score,
)
from .gof import GofReport, ad_statistic, bootstrap_ks_pvalue, cvm_statistic, gof_report, ks_statistic
from .special_fn import lambert_w_m1, ln_gamma

__version__ = "0.1.0"

__all__ = [
    "GrlParams", "MomentSet", "Sample", "cdf", "hazard", "log_pdf", "log_survival", "moments",
    "order_stat_cdf", "order_stat_pdf", "pdf", "quantile", "raw_moment", "sample_inverse",
    "sample_mixture", "survival", "ttt_transform", "EstimationOptions", "EstimationResult",
    "Method", "estimate", "log_likelihood", "observed_information", "score", "GofReport",
    "ad_statistic", "bootstrap_ks_pvalue", "cvm_statistic", "gof_report", "ks_statistic",
    "lambert_w_m1", "ln_gamma", "__version__",
]
