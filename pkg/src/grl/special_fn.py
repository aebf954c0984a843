"""Real W_{-1} branch of the Lambert W function and a Lanczos log-gamma.

Both are self-contained so the distribution core does not depend on the
branch conventions of any particular special-function library.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["lambert_w_m1", "lambert_w_m1_from_log", "ln_gamma", "BRANCH_POINT"]

BRANCH_POINT = -math.exp(-1.0)
# Arguments this far below -1/e are treated as rounding noise at the branch point.
_BRANCH_SLACK = 1e-15
_MAX_ITER = 100

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _initial_guess(log_negx: np.ndarray) -> np.ndarray:
    # Series about the branch point, in terms of q = -sqrt(2 (1 + e x)).
    one_plus_ex = -np.expm1(log_negx + 1.0)
    q = -np.sqrt(2.0 * np.clip(one_plus_ex, 0.0, None))
    near_branch = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q**3
    # Asymptotic expansion for x -> 0^-.
    l1 = np.minimum(log_negx, -1.0 - 1e-12)
    l2 = np.log(-l1)
    near_zero = l1 - l2 + l2 / l1
    guess = np.where(log_negx > -2.0, near_branch, near_zero)
    return np.minimum(guess, -1.0 - 1e-12)


def _bisect(target: float) -> float:
    # g(w) = w + log(-w) is increasing on w < -1.
    lo, hi = -1e6, -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid + math.log(-mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w_m1_from_log(log_negx):
    """W_{-1}(x) given ``log(-x)`` instead of ``x``.

    Working with ``log(-x)`` keeps the solve well defined when ``x`` itself
    underflows, which happens in the quantile for large shape values. The
    branch point corresponds to ``log(-x) = -1``; values above ``-1`` are
    outside the domain.

    Solves ``w + log(-w) = log(-x)`` by Halley iteration, with a bisection
    fallback for entries that fail to converge.
    """
    L = np.asarray(log_negx, dtype=float)
    scalar = L.ndim == 0
    L = np.atleast_1d(L)
    if np.any(np.isnan(L)) or np.any(L > -1.0 + _BRANCH_SLACK * math.e):
        raise ValueError("log(-x) must be <= -1 (x in [-1/e, 0))")
    w = _initial_guess(L)
    at_branch = L >= -1.0 - 1e-300
    done = at_branch.copy()
    for _ in range(_MAX_ITER):
        active = ~done
        if not active.any():
            break
        wa = w[active]
        g = wa + np.log(-wa) - L[active]
        g1 = 1.0 + 1.0 / wa
        g2 = -1.0 / (wa * wa)
        step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2)
        wn = wa - step
        # keep iterates on the branch
        wn = np.where(wn >= -1.0, 0.5 * (wa - 1.0), wn)
        w[active] = wn
        conv = np.abs(step) <= 4e-16 * np.abs(wn)
        idx = np.flatnonzero(active)
        done[idx[conv]] = True
    for i in np.flatnonzero(~done):
        w[i] = _bisect(float(L[i]))
    w[at_branch] = -1.0
    return float(w[0]) if scalar else w


def lambert_w_m1(x):
    """Lower real branch W_{-1} of the Lambert W function.

    Parameters
    ----------
    x : float or array_like
        Arguments in ``[-1/e, 0)``. Values within 1e-15 below ``-1/e`` are
        clamped to the branch point.

    Returns
    -------
    float or ndarray
        ``w <= -1`` with ``w * exp(w) == x``.

    Raises
    ------
    ValueError
        If any argument lies outside the domain.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa >= 0.0) or np.any(xa < BRANCH_POINT - _BRANCH_SLACK):
        raise ValueError("lambert_w_m1 is defined on [-1/e, 0)")
    clamped = np.maximum(xa, BRANCH_POINT)
    log_negx = np.where(clamped <= BRANCH_POINT, -1.0, np.log(-clamped))
    return lambert_w_m1_from_log(log_negx)


def ln_gamma(z: float) -> float:
    """Natural log of the gamma function for ``z > 0`` (Lanczos, g=7)."""
    z = float(z)
    if not z > 0.0 or math.isinf(z):
        raise ValueError(f"ln_gamma requires finite z > 0, got {z!r}")
    if z < 0.5:
        # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return math.log(math.pi / math.sin(math.pi * z)) - ln_gamma(1.0 - z)
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _LN_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)
