"""Generalized Ramos-Louzada (GRL) lifetime distribution.

Survival function::

    S(t) = (1 + z / (lam - 1)) * exp(-z),    z = t**alpha / lam

with ``lam >= 2`` and ``alpha > 0``. At ``alpha = 1`` this is the
one-parameter Ramos-Louzada (RL) model. Internally everything is
expressed through ``z``, which keeps the tail computations in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .special_fn import lambert_w_m1_from_log, ln_gamma

__all__ = [
    "GrlParams",
    "Sample",
    "MomentSet",
    "mixture_weight",
    "pdf",
    "log_pdf",
    "cdf",
    "survival",
    "log_survival",
    "hazard",
    "quantile",
    "density_at_origin",
    "mixture_components",
    "sample_inverse",
    "sample_mixture",
    "make_rng",
    "raw_moment",
    "moments",
    "order_stat_pdf",
    "order_stat_cdf",
    "ttt_transform",
]


@dataclass(frozen=True)
class GrlParams:
    """Shape pair ``(lam, alpha)`` with ``lam >= 2`` and ``alpha > 0``."""

    lam: float
    alpha: float

    def __post_init__(self):
        lam, alpha = float(self.lam), float(self.alpha)
        if not (math.isfinite(lam) and lam >= 2.0):
            raise ValueError(f"lambda must be finite and >= 2, got {self.lam!r}")
        if not (math.isfinite(alpha) and alpha > 0.0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", alpha)

    def as_tuple(self) -> tuple[float, float]:
        return (self.lam, self.alpha)


class Sample:
    """Immutable collection of positive observations.

    The sorted copy and the log of the sorted values are computed once; the
    estimators and goodness-of-fit statistics work on order statistics only.
    """

    __slots__ = ("_values", "_sorted", "_log_sorted")

    def __init__(self, values):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("sample is empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains non-finite values")
        if np.any(arr <= 0.0):
            raise ValueError("sample values must be > 0")
        arr.setflags(write=False)
        srt = np.sort(arr)
        srt.setflags(write=False)
        logs = np.log(srt)
        logs.setflags(write=False)
        self._values = arr
        self._sorted = srt
        self._log_sorted = logs

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def sorted(self) -> np.ndarray:
        return self._sorted

    @property
    def log_sorted(self) -> np.ndarray:
        return self._log_sorted

    def __len__(self) -> int:
        return self._values.size

    def __iter__(self):
        return iter(self._values)

    def __repr__(self) -> str:
        return f"Sample(n={len(self)})"


class MomentSet(NamedTuple):
    mean: float
    variance: float
    skewness: float
    kurtosis: float


def mixture_weight(params: GrlParams) -> float:
    """Weight ``p = (lam - 2) / (lam - 1)`` of the Weibull component."""
    return (params.lam - 2.0) / (params.lam - 1.0)


def _z(params: GrlParams, t):
    """``t**alpha / lam`` computed as ``exp(alpha log t - log lam)``; t=0 maps to 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(params.alpha * np.log(t) - math.log(params.lam))


def _check_nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    return t


def _check_pos(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t <= 0.0):
        raise ValueError("t must be > 0")
    return t


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def density_at_origin(params: GrlParams) -> float:
    """Limit of the density as ``t -> 0+``: ``inf``, a finite value, or 0."""
    if params.alpha < 1.0:
        return math.inf
    if params.alpha > 1.0:
        return 0.0
    return (params.lam - 2.0) / (params.lam * (params.lam - 1.0))


def log_pdf(params: GrlParams, t):
    """Log density for ``t > 0``."""
    t = _check_pos(t)
    lam, alpha = params.lam, params.alpha
    logt = np.log(t)
    z = np.exp(alpha * logt - math.log(lam))
    with np.errstate(divide="ignore"):
        out = (
            math.log(alpha) - math.log(lam) - math.log(lam - 1.0)
            + (alpha - 1.0) * logt + np.log((lam - 2.0) + z) - z
        )
    return _out(out)


def pdf(params: GrlParams, t):
    """Density. ``t = 0`` returns the limiting value from :func:`density_at_origin`."""
    t = _check_nonneg(t)
    zero = t == 0.0
    safe = np.where(zero, 1.0, t)
    out = np.exp(log_pdf(params, safe))
    out = np.where(zero, density_at_origin(params), out)
    return _out(out)


def log_survival(params: GrlParams, t):
    t = _check_nonneg(t)
    z = _z(params, t)
    return _out(np.log1p(z / (params.lam - 1.0)) - z)


def survival(params: GrlParams, t):
    """``P(T > t)`` evaluated directly, so it stays accurate deep in the tail."""
    return _out(np.exp(log_survival(params, t)))


def cdf(params: GrlParams, t):
    return _out(-np.expm1(log_survival(params, t)))


def hazard(params: GrlParams, t):
    """Hazard rate ``f(t) / S(t)``."""
    t = _check_pos(t)
    lam, alpha = params.lam, params.alpha
    z = _z(params, t)
    out = alpha * np.exp((alpha - 1.0) * np.log(t)) * ((lam - 2.0) + z) / (lam * ((lam - 1.0) + z))
    return _out(out)


def mixture_components(params: GrlParams, t):
    """The Weibull (j=1) and generalized-gamma (j=2) component densities."""
    t = _check_pos(t)
    lam, alpha = params.lam, params.alpha
    logt = np.log(t)
    z = np.exp(alpha * logt - math.log(lam))
    f1 = np.exp(math.log(alpha) - math.log(lam) + (alpha - 1.0) * logt - z)
    f2 = np.exp(math.log(alpha) - 2.0 * math.log(lam) + (2.0 * alpha - 1.0) * logt - z)
    return _out(f1), _out(f2)


def _quantile_z(lam: float, log1m_p):
    """``z = t**alpha / lam`` at probability ``p``, given ``log(1 - p)``."""
    # W_{-1} argument (lam-1)(p-1)exp(1-lam), passed as its log
    log_negx = math.log(lam - 1.0) + log1m_p + 1.0 - lam
    w = lambert_w_m1_from_log(log_negx)
    z = np.maximum(-(w + (lam - 1.0)), 0.0)
    # Near the branch point (lam ~ 2, small p) the W route loses digits to
    # cancellation; polish on z - log1p(z/(lam-1)) = -log(1-p) directly.
    for _ in range(2):
        h = z - np.log1p(z / (lam - 1.0)) + log1m_p
        dh = ((lam - 2.0) + z) / ((lam - 1.0) + z)
        ok = dh > 1e-300
        z = np.where(ok, np.maximum(z - h / np.where(ok, dh, 1.0), 0.0), z)
    return z


def quantile(params: GrlParams, p):
    """Inverse CDF via the lower Lambert W branch."""
    p = np.asarray(p, dtype=float)
    if np.any(np.isnan(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie in (0, 1)")
    z = _quantile_z(params.lam, np.log1p(-p))
    with np.errstate(divide="ignore"):
        out = np.exp((math.log(params.lam) + np.log(z)) / params.alpha)
    return _out(out)


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator; ``seed`` is an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.Philox(seed))


def sample_inverse(params: GrlParams, n: int, seed) -> Sample:
    """Draw ``n`` observations by inverting uniforms through :func:`quantile`."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = make_rng(seed).random(n)
    # random() can return exactly 0
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return Sample(quantile(params, u))


def sample_mixture(params: GrlParams, n: int, seed) -> Sample:
    """Draw ``n`` observations through the two-component mixture.

    ``t**alpha`` is exponential with mean ``lam`` with probability ``p`` and
    Gamma(2, scale=lam) otherwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    weibull = rng.random(n) < mixture_weight(params)
    shape = np.where(weibull, 1.0, 2.0)
    y = rng.gamma(shape, params.lam)
    return Sample(y ** (1.0 / params.alpha))


def _log_raw_moment(params: GrlParams, r: float) -> float:
    lam, alpha = params.lam, params.alpha
    k = r / alpha
    return (
        math.log(r) + k * math.log(lam) - math.log(alpha) - math.log(lam - 1.0)
        + math.log(lam + k - 1.0) + ln_gamma(k)
    )


def raw_moment(params: GrlParams, r: int) -> float:
    """``E[T**r]``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    lm = _log_raw_moment(params, r)
    if lm > 709.78:
        raise OverflowError(f"moment of order {r} overflows (log = {lm:.6g})")
    return math.exp(lm)


def moments(params: GrlParams) -> MomentSet:
    """Mean, variance, skewness and (Pearson) kurtosis."""
    mu = [1.0] + [raw_moment(params, r) for r in range(1, 5)]
    m = mu[1]

    def central(r):
        return math.fsum(math.comb(r, i) * (-m) ** (r - i) * mu[i] for i in range(r + 1))

    var = central(2)
    return MomentSet(m, var, central(3) / var**1.5, central(4) / var**2)


def _check_index(r: int, n: int):
    if not (1 <= r <= n):
        raise IndexError(f"order statistic index r={r} outside [1, {n}]")


def order_stat_pdf(params: GrlParams, r: int, n: int, x):
    """Density of the ``r``-th order statistic out of ``n``."""
    _check_index(r, n)
    x = _check_pos(x)
    log_c = ln_gamma(n + 1) - ln_gamma(r) - ln_gamma(n - r + 1)
    log_s = np.asarray(log_survival(params, x))
    with np.errstate(divide="ignore"):
        log_f = np.log(-np.expm1(log_s))
    out = np.exp(log_c + (r - 1) * log_f + (n - r) * log_s + log_pdf(params, x))
    return _out(out)


def order_stat_cdf(params: GrlParams, r: int, n: int, x):
    """``P(X_{r:n} <= x) = sum_{l=r}^{n} C(n,l) F^l S^(n-l)``."""
    _check_index(r, n)
    x = _check_nonneg(x)
    log_s = np.asarray(log_survival(params, x))[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_f = np.log(-np.expm1(log_s))
        ls = np.arange(r, n + 1)
        log_c = np.array([ln_gamma(n + 1) - ln_gamma(l + 1) - ln_gamma(n - l + 1) for l in ls])
        terms = log_c + ls * log_f + (n - ls) * np.where(ls == n, 0.0, log_s)
        out = np.exp(terms).sum(axis=-1)
    return _out(np.clip(out, 0.0, 1.0))


def ttt_transform(sample) -> list[tuple[float, float]]:
    """Scaled total-time-on-test curve ``[(i/n, T(i/n)), ...]``."""
    s = sample if isinstance(sample, Sample) else Sample(sample)
    x = s.sorted
    n = x.size
    i = np.arange(1, n + 1)
    csum = np.cumsum(x)
    total = csum[-1]
    num = csum + (n - i) * x
    return [(float(a), float(b)) for a, b in zip(i / n, num / total)]
