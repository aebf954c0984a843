"""Goodness-of-fit statistics and a parametric bootstrap for the KS p-value."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distribution import GrlParams, Sample, log_survival, sample_inverse
from .estimators import EstimationOptions, Method, estimate, log_likelihood, with_start

__all__ = [
    "GofReport",
    "BootstrapResult",
    "ks_statistic",
    "cvm_statistic",
    "ad_statistic",
    "bootstrap_ks_pvalue",
    "gof_report",
    "BOOTSTRAP_SCHEME",
]

BOOTSTRAP_SCHEME = "parametric-refit"


def _as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample(sample)


def _fitted_cdf(params: GrlParams, s: Sample):
    log_s = np.asarray(log_survival(params, s.sorted))
    return -np.expm1(log_s), log_s


def ks_statistic(params: GrlParams, sample) -> float:
    s = _as_sample(sample)
    F, _ = _fitted_cdf(params, s)
    n = F.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def cvm_statistic(params: GrlParams, sample, modified: bool = False) -> float:
    """Cramer-von Mises ``W``; ``modified`` applies the ``(1 + 0.5/n)`` factor."""
    s = _as_sample(sample)
    F, _ = _fitted_cdf(params, s)
    n = F.size
    i = np.arange(1, n + 1)
    w = 1.0 / (12.0 * n) + float(np.sum((F - (2 * i - 1) / (2.0 * n)) ** 2))
    return w * (1.0 + 0.5 / n) if modified else w


def ad_statistic(params: GrlParams, sample, modified: bool = False) -> float:
    """Anderson-Darling ``A``; ``inf`` when a fitted CDF value is exactly 0 or 1.

    ``modified`` applies the ``(1 + 0.75/n + 2.25/n**2)`` factor.
    """
    s = _as_sample(sample)
    F, log_s = _fitted_cdf(params, s)
    n = F.size
    if np.any(F <= 0.0) or np.any(F >= 1.0):
        return math.inf
    i = np.arange(1, n + 1)
    a = -n - float(np.sum((2 * i - 1) * (np.log(F) + log_s[::-1]))) / n
    return a * (1.0 + 0.75 / n + 2.25 / n**2) if modified else a


class BootstrapResult(NamedTuple):
    pvalue: float
    ks_observed: float
    params: GrlParams
    replicates: int
    failures: int


def _replicate_ks(args):
    method, params, n, seed_seq, options = args
    boot = sample_inverse(params, n, seed_seq)
    try:
        fit = estimate(method, boot, with_start(options, params))
    except ValueError:
        return None
    if not fit.converged:
        return None
    return ks_statistic(fit.params, boot)


def bootstrap_ks_pvalue(
    method,
    sample,
    B: int,
    seed: int,
    *,
    params: GrlParams | None = None,
    options: EstimationOptions | None = None,
    workers: int = 1,
) -> BootstrapResult:
    """Parametric bootstrap p-value of the KS statistic.

    The sample is fitted by ``method`` (unless ``params`` is supplied), then
    each of ``B`` replicates is drawn from the fitted model, refitted by the
    same method, and its KS statistic recorded. Refits that fail are dropped
    and counted. The p-value is ``(1 + #{KS_b >= KS_obs}) / (B_ok + 1)``.

    Replicate ``b`` uses the seed sequence spawned from ``seed`` at index
    ``b``, so results do not depend on ``workers``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    method = Method.parse(method)
    s = _as_sample(sample)
    opts = options or EstimationOptions(seed=seed)
    if params is None:
        params = estimate(method, s, opts).params
    ks_obs = ks_statistic(params, s)
    children = np.random.SeedSequence(seed).spawn(B)
    jobs = [(method, params, len(s), child, opts) for child in children]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            stats = list(ex.map(_replicate_ks, jobs, chunksize=max(1, B // (4 * workers))))
    else:
        stats = [_replicate_ks(j) for j in jobs]
    valid = np.array([v for v in stats if v is not None])
    failures = B - valid.size
    exceed = int(np.count_nonzero(valid >= ks_obs))
    return BootstrapResult(
        pvalue=(1.0 + exceed) / (valid.size + 1.0),
        ks_observed=ks_obs,
        params=params,
        replicates=int(valid.size),
        failures=int(failures),
    )


@dataclass(frozen=True)
class GofReport:
    neg_loglik: float
    cvm_w: float
    ad_a: float
    ks: float
    ks_pvalue: float | None = None
    modified: bool = False
    bootstrap_failures: int | None = None

    def as_dict(self) -> dict:
        return {
            "neg_loglik": self.neg_loglik,
            "cvm_w": self.cvm_w,
            "ad_a": self.ad_a,
            "ks": self.ks,
            "ks_pvalue": self.ks_pvalue,
            "modified": self.modified,
            "bootstrap_failures": self.bootstrap_failures,
        }


def gof_report(
    params: GrlParams,
    sample,
    *,
    modified: bool = False,
    bootstrap: int = 0,
    method=Method.MLE,
    seed: int = 0,
    options: EstimationOptions | None = None,
    workers: int = 1,
) -> GofReport:
    """Bundle ``-loglik``, ``W``, ``A``, KS and, if ``bootstrap > 0``, the KS p-value."""
    s = _as_sample(sample)
    pvalue = failures = None
    if bootstrap > 0:
        boot = bootstrap_ks_pvalue(
            method, s, bootstrap, seed, params=params, options=options, workers=workers
        )
        pvalue, failures = boot.pvalue, boot.failures
    return GofReport(
        neg_loglik=-log_likelihood(params, s),
        cvm_w=cvm_statistic(params, s, modified),
        ad_a=ad_statistic(params, s, modified),
        ks=ks_statistic(params, s),
        ks_pvalue=pvalue,
        modified=modified,
        bootstrap_failures=failures,
    )
