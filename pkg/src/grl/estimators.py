"""Eight frequentist estimators for the GRL parameters.

All objectives are written as functions to be *minimized* over
``(u, v)`` with ``lam = 1 + exp(u)``, ``u >= 0``, and ``alpha = exp(v)``.
The bound ``u >= 0`` keeps the boundary ``lam = 2`` reachable: for
samples from ``lam`` near 2 the objectives often have their optimum on
the boundary, separated from an interior ridge by a valley. A single
Nelder-Mead driver with seeded restarts serves every method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import least_squares, minimize, minimize_scalar

from .distribution import GrlParams, Sample, _quantile_z, log_pdf, make_rng, raw_moment

__all__ = [
    "Method",
    "EstimationOptions",
    "EstimationResult",
    "InfoMatrix",
    "log_likelihood",
    "score",
    "observed_information",
    "cdf_gradient",
    "spacings",
    "plotting_positions",
    "objective",
    "make_objective",
    "moment_start",
    "estimate",
]

LAMBDA_FLOOR = 2.0 + 1e-6
_U_BOUNDS = (0.0, 25.0)
_V_BOUNDS = (math.log(1e-3), math.log(1e3))
_TINY = 1e-300


class Method(str, enum.Enum):
    MLE = "MLE"
    OLSE = "OLSE"
    WLSE = "WLSE"
    MPSE = "MPSE"
    CVME = "CVME"
    ADE = "ADE"
    RADE = "RADE"
    PCE = "PCE"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(
                f"unknown method {value!r}; expected one of {', '.join(m.value for m in cls)}"
            ) from None


@dataclass(frozen=True)
class EstimationOptions:
    """Optimizer settings.

    ``start`` overrides the moment-matched starting point. With
    ``n_starts > 1`` the second start sits on the ``lam = 2`` boundary and
    the remainder are seeded perturbations of the first. ``step`` sets the
    initial simplex edge in ``(log(lam - 1), log(alpha))``.
    """

    start: tuple[float, float] | None = None
    max_iter: int = 2000
    xtol: float = 1e-8
    ftol: float = 1e-10
    seed: int = 0
    n_starts: int = 5
    step: tuple[float, float] = (0.5, 0.25)


@dataclass(frozen=True)
class EstimationResult:
    method: Method
    params: GrlParams
    objective: float
    converged: bool
    iterations: int
    std_errors: tuple[float, float] | None = None
    at_boundary: bool = False


class InfoMatrix(NamedTuple):
    """Observed information (negative Hessian of the log-likelihood)."""

    h11: float
    h12: float
    h22: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h12, self.h22]])

    def is_positive_definite(self) -> bool:
        return self.h11 > 0.0 and self.h11 * self.h22 - self.h12 * self.h12 > 0.0

    def std_errors(self) -> tuple[float, float] | None:
        if not self.is_positive_definite():
            return None
        cov = np.linalg.inv(self.matrix())
        return (float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1])))


def _as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample(sample)


def _tail_terms(lam: float, alpha: float, logx: np.ndarray):
    """Return ``(z, log S)`` at the given log-observations."""
    z = np.exp(alpha * logx - math.log(lam))
    return z, np.log1p(z / (lam - 1.0)) - z


def _loglik(lam: float, alpha: float, logx: np.ndarray) -> float:
    n = logx.size
    z = np.exp(alpha * logx - math.log(lam))
    with np.errstate(divide="ignore"):
        tail = np.log((lam - 2.0) + z).sum()
    # sum log(lam^2 + t^alpha - 2 lam) = n log lam + sum log(lam - 2 + z)
    return float(
        n * math.log(alpha) - n * math.log(lam) - n * math.log(lam - 1.0)
        - z.sum() + (alpha - 1.0) * logx.sum() + tail
    )


def log_likelihood(params: GrlParams, sample) -> float:
    """Log-likelihood of a complete sample."""
    s = _as_sample(sample)
    return _loglik(params.lam, params.alpha, s.log_sorted)


def _require_interior(params: GrlParams):
    if params.lam <= 2.0:
        raise ValueError("derivatives require lambda > 2")


def score(params: GrlParams, sample) -> tuple[float, float]:
    """Gradient of the log-likelihood in ``(lam, alpha)``."""
    _require_interior(params)
    s = _as_sample(sample)
    lam, alpha = params.lam, params.alpha
    logt = s.log_sorted
    n = logt.size
    ta = np.exp(alpha * logt)
    d = lam * lam + ta - 2.0 * lam
    d_lam = (
        -2.0 * n / lam - n / (lam - 1.0) + ta.sum() / lam**2
        + np.sum(2.0 * (lam - 1.0) / d)
    )
    tl = ta * logt
    d_alpha = n / alpha - tl.sum() / lam + logt.sum() + np.sum(tl / d)
    return float(d_lam), float(d_alpha)


def observed_information(params: GrlParams, sample) -> InfoMatrix:
    """Negative Hessian of the log-likelihood."""
    _require_interior(params)
    s = _as_sample(sample)
    lam, alpha = params.lam, params.alpha
    logt = s.log_sorted
    n = logt.size
    ta = np.exp(alpha * logt)
    d = lam * lam + ta - 2.0 * lam
    d2 = d * d
    tl = ta * logt
    tll = tl * logt
    h11 = (
        -2.0 * n / lam**2 - n / (lam - 1.0) ** 2 + 2.0 * ta.sum() / lam**3
        - np.sum(2.0 * (ta - lam * lam + 2.0 * lam - 2.0) / d2)
    )
    h12 = -tl.sum() / lam**2 + np.sum(2.0 * (lam - 1.0) * tl / d2)
    h22 = n / alpha**2 + tll.sum() / lam - np.sum(lam * (lam - 2.0) * tll / d2)
    return InfoMatrix(float(h11), float(h12), float(h22))


def cdf_gradient(params: GrlParams, x):
    """Partial derivatives ``(dF/dlam, dF/dalpha)`` of the CDF at ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x <= 0.0):
        raise ValueError("x must be > 0")
    lam, alpha = params.lam, params.alpha
    logx = np.log(x)
    z = np.exp(alpha * logx - math.log(lam))
    ez = z * np.exp(-z)
    d_lam = ez * (1.0 / (lam - 1.0) ** 2 - ((lam - 2.0) + z) / (lam * (lam - 1.0)))
    d_alpha = ((lam - 2.0) + z) / (lam - 1.0) * ez * logx
    if x.ndim == 0:
        return float(d_lam), float(d_alpha)
    return d_lam, d_alpha


def _cdf_parts(lam, alpha, logx):
    z, log_s = _tail_terms(lam, alpha, logx)
    F = -np.expm1(log_s)
    S = np.exp(log_s)
    return F, S, log_s


def _spacings(F: np.ndarray, S: np.ndarray) -> np.ndarray:
    Fe = np.concatenate(([0.0], F, [1.0]))
    Se = np.concatenate(([1.0], S, [0.0]))
    # differences of whichever tail is smaller keep precision near 1
    return np.where(Fe[1:] <= 0.5, Fe[1:] - Fe[:-1], Se[:-1] - Se[1:])


def spacings(params: GrlParams, sample) -> np.ndarray:
    """CDF spacings ``D_1..D_{n+1}`` of the ordered sample."""
    s = _as_sample(sample)
    F, S, _ = _cdf_parts(params.lam, params.alpha, s.log_sorted)
    return _spacings(F, S)


def plotting_positions(n: int) -> np.ndarray:
    """``i / (n + 1)`` for ``i = 1..n``."""
    return np.arange(1, n + 1) / (n + 1.0)


def _pce_quantiles(lam, alpha, log1m_u):
    z = _quantile_z(lam, log1m_u)
    with np.errstate(divide="ignore"):
        return np.exp((math.log(lam) + np.log(z)) / alpha)


def make_objective(method, sample) -> Callable[[float, float], float]:
    """Return ``f(lam, alpha)`` giving the method's objective (to be minimized)."""
    method = Method.parse(method)
    s = _as_sample(sample)
    x = s.sorted
    logx = s.log_sorted
    n = x.size
    i = np.arange(1, n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if method is Method.MLE:
            return lambda lam, alpha: -_loglik(lam, alpha, logx)

        if method is Method.OLSE:
            u = i / (n + 1.0)

            def f(lam, alpha):
                F, _, _ = _cdf_parts(lam, alpha, logx)
                return float(np.sum((F - u) ** 2))
            return f

        if method is Method.WLSE:
            u = i / (n + 1.0)
            w = (n + 1.0) ** 2 * (n + 2.0) / (i * (n - i + 1.0))

            def f(lam, alpha):
                F, _, _ = _cdf_parts(lam, alpha, logx)
                return float(np.sum(w * (F - u) ** 2))
            return f

        if method is Method.CVME:
            c = (2.0 * i - 1.0) / (2.0 * n)

            def f(lam, alpha):
                F, _, _ = _cdf_parts(lam, alpha, logx)
                return float(1.0 / (12.0 * n) + np.sum((F - c) ** 2))
            return f

        if method is Method.MPSE:
            logx_ext = np.concatenate((logx, logx[-1:]))

            def f(lam, alpha):
                F, S, _ = _cdf_parts(lam, alpha, logx)
                D = _spacings(F, S)
                with np.errstate(divide="ignore"):
                    logD = np.log(D)
                tied = D < _TINY
                if tied.any():
                    # Cheng-Amin: a zero spacing contributes log f at the tied value
                    logD[tied] = log_pdf(GrlParams(lam, alpha), np.exp(logx_ext[tied]))
                return float(-logD.sum() / (n + 1.0))
            return f

        if method is Method.ADE:
            k = 2.0 * i - 1.0

            def f(lam, alpha):
                F, _, log_s = _cdf_parts(lam, alpha, logx)
                with np.errstate(divide="ignore"):
                    logF = np.log(F)
                return float(-n - np.sum(k * (logF + log_s[::-1])) / n)
            return f

        if method is Method.RADE:
            k = 2.0 * i - 1.0

            def f(lam, alpha):
                F, _, log_s = _cdf_parts(lam, alpha, logx)
                return float(n / 2.0 - 2.0 * F.sum() - np.sum(k * log_s[::-1]) / n)
            return f

        if method is Method.PCE:
            log1m_u = np.log1p(-i / (n + 1.0))

            def f(lam, alpha):
                q = _pce_quantiles(lam, alpha, log1m_u)
                return float(np.sum((x - q) ** 2))
            return f

    raise AssertionError(method)  # pragma: no cover


def objective(method, params: GrlParams, sample) -> float:
    """Objective value of ``method`` at ``params``."""
    return make_objective(method, sample)(params.lam, params.alpha)


def _to_free(lam: float, alpha: float) -> np.ndarray:
    return np.array([math.log(lam - 1.0), math.log(alpha)])


def _from_free(uv) -> tuple[float, float]:
    return 1.0 + math.exp(max(uv[0], 0.0)), math.exp(uv[1])


def moment_start(sample) -> tuple[float, float]:
    """Match the sample mean and variance to the model's; ``(3, 1)`` on failure."""
    s = _as_sample(sample)
    x = s.sorted
    mean = float(x.mean())
    var = float(x.var(ddof=1)) if x.size > 1 else 0.0
    if not (mean > 0.0 and var > 0.0):
        return (3.0, 1.0)
    target = np.array([math.log(mean), math.log(var)])

    def resid(uv):
        lam, alpha = _from_free(uv)
        try:
            p = GrlParams(lam, alpha)
            m1 = raw_moment(p, 1)
            m2 = raw_moment(p, 2)
        except (OverflowError, ValueError):
            return np.array([1e3, 1e3])
        v = m2 - m1 * m1
        if not v > 0.0:
            return np.array([1e3, 1e3])
        return np.array([math.log(m1), math.log(v)]) - target

    try:
        sol = least_squares(
            resid, _to_free(3.0, 1.0), bounds=([_U_BOUNDS[0], _V_BOUNDS[0]], [_U_BOUNDS[1], _V_BOUNDS[1]]),
            xtol=1e-8, max_nfev=200,
        )
    except (ValueError, FloatingPointError):
        return (3.0, 1.0)
    if not np.all(np.isfinite(sol.x)) or sol.cost > 1e-2:
        return (3.0, 1.0)
    return _from_free(sol.x)


def _boundary_start(fun) -> np.ndarray:
    """Best ``alpha`` at ``lam = 2``, as a point in ``(u, v)``."""
    def profile(v):
        val = fun(2.0, math.exp(v))
        return val if math.isfinite(val) else 1e300

    with np.errstate(all="ignore"):
        res = minimize_scalar(profile, bounds=_V_BOUNDS, method="bounded", options={"xatol": 1e-6})
    return np.array([0.0, float(res.x)])


def _run_simplex(fun, x0: np.ndarray, opts: EstimationOptions):
    def wrapped(uv):
        val = fun(*_from_free(uv))
        return val if math.isfinite(val) else math.inf

    du, dv = opts.step
    # step inward at an upper bound so the simplex never collapses
    du = -du if x0[0] + du > _U_BOUNDS[1] else du
    dv = -dv if x0[1] + dv > _V_BOUNDS[1] else dv
    simplex = np.array([x0, x0 + [du, 0.0], x0 + [0.0, dv]])
    with np.errstate(all="ignore"):
        res = minimize(
            wrapped, x0, method="Nelder-Mead",
            bounds=[_U_BOUNDS, _V_BOUNDS],
            options=dict(
                xatol=opts.xtol, fatol=opts.ftol, maxiter=opts.max_iter,
                maxfev=4 * opts.max_iter, initial_simplex=simplex,
            ),
        )
    return res


def estimate(method, sample, options: EstimationOptions | None = None) -> EstimationResult:
    """Fit the GRL model to ``sample`` with the given method.

    Raises
    ------
    ValueError
        If the sample has fewer than 3 observations or all are equal.
    """
    method = Method.parse(method)
    opts = options or EstimationOptions()
    s = _as_sample(sample)
    if len(s) < 3:
        raise ValueError("estimation needs at least 3 observations")
    if s.sorted[0] == s.sorted[-1]:
        raise ValueError("degenerate sample: all observations are equal")
    fun = make_objective(method, s)

    start = opts.start if opts.start is not None else moment_start(s)
    base = _to_free(*start)
    starts = [base]
    if opts.n_starts > 1:
        starts.append(_boundary_start(fun))
        rng = make_rng(opts.seed)
        for _ in range(opts.n_starts - 2):
            starts.append(base + rng.normal(0.0, [1.0, 0.3]))
    starts = [np.clip(x0, [_U_BOUNDS[0], _V_BOUNDS[0]], [_U_BOUNDS[1], _V_BOUNDS[1]]) for x0 in starts]

    best = None
    for x0 in starts:
        res = _run_simplex(fun, x0, opts)
        if best is None or (np.isfinite(res.fun) and res.fun < best.fun):
            best = res

    lam, alpha = _from_free(best.x)
    at_boundary = lam < LAMBDA_FLOOR
    params = GrlParams(max(lam, LAMBDA_FLOOR), alpha)
    value = fun(params.lam, params.alpha)
    converged = bool(best.success) and math.isfinite(value)

    std_errors = None
    if method is Method.MLE:
        std_errors = observed_information(params, s).std_errors()
    return EstimationResult(
        method=method, params=params, objective=float(value), converged=converged,
        iterations=int(best.nit), std_errors=std_errors, at_boundary=at_boundary,
    )


def with_start(options: EstimationOptions, params: GrlParams) -> EstimationOptions:
    """Copy of ``options`` starting at ``params`` with a single start."""
    return replace(options, start=params.as_tuple(), n_starts=1)
