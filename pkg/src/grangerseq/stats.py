"""Marcum Q-function, chi-squared tails and threshold calibration.

``marcum_q`` is evaluated from its Poisson-mixture series

    Q_K(a, b) = sum_j Pois(j; a^2/2) * Pois_cdf(K + j - 1; b^2/2)

summed outward from the Poisson mode so that large noncentralities do not
underflow.  ``noncentral_chi2_sf`` goes through scipy and is deliberately a
separate code path so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy import stats as sps

_TAIL = 1e-17
_ROOT_TOL = 1e-10


def _check_finite_nonneg(**kwargs: float) -> None:
    for name, val in kwargs.items():
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val}")
        if val < 0:
            raise ValueError(f"{name} must be >= 0, got {val}")


def _log_pois(j: int, mu: float) -> float:
    if mu == 0.0:
        return 0.0 if j == 0 else -math.inf
    return -mu + j * math.log(mu) - math.lgamma(j + 1)


def _pois_cdf(n: int, x: float) -> float:
    """P(Pois(x) <= n) for integer n >= 0, i.e. the regularized upper gamma Q(n+1, x)."""
    if x == 0.0:
        return 1.0
    mode = min(n, int(x))
    total = 0.0
    lw = _log_pois(mode, x)
    k, t = mode, math.exp(lw)
    while k >= 0:
        total += t
        if t < _TAIL * max(total, 1e-300) and k < x:
            break
        t *= k / x
        k -= 1
    k, t = mode + 1, math.exp(lw)
    while k <= n:
        t *= x / k
        total += t
        if t < _TAIL * max(total, 1e-300) and k > x:
            break
        k += 1
    return min(total, 1.0)


def marcum_q(K: int, a: float, b: float) -> float:
    """Generalized Marcum Q-function of positive integer order K.

    Equals ``P(chi2_{2K}(a^2) > b^2)``.  Absolute accuracy is about 1e-14 for
    the argument ranges met here (a^2 up to ~1e3).
    """
    if int(K) != K or K < 1:
        raise ValueError(f"order K must be a positive integer, got {K!r}")
    K = int(K)
    a, b = float(a), float(b)
    _check_finite_nonneg(a=a, b=b)
    if b == 0.0:
        return 1.0
    mu = 0.5 * a * a
    x = 0.5 * b * b
    if mu == 0.0:
        return _pois_cdf(K - 1, x)

    j0 = int(mu)
    w0 = math.exp(_log_pois(j0, mu))
    g0 = _pois_cdf(K + j0 - 1, x)

    total = w0 * g0
    # upward: weights shrink past the mode, gamma tail grows by one Poisson term per step
    w, g, lterm = w0, g0, _log_pois(K + j0 - 1, x)
    j = j0
    while True:
        j += 1
        w *= mu / j
        lterm += math.log(x) - math.log(K + j - 1)
        g = min(g + math.exp(lterm), 1.0)
        total += w * g
        if w < _TAIL and j > mu:
            break
    # downward: gamma tail shrinks, weights shrink below the mode
    w, g = w0, g0
    j = j0
    while j > 0:
        g = max(g - math.exp(_log_pois(K + j - 1, x)), 0.0)
        w *= j / mu
        j -= 1
        total += w * g
        if w * g < _TAIL:
            break
    return min(max(total, 0.0), 1.0)


def noncentral_chi2_sf(dof: float, kappa: float, t: float) -> float:
    """Survival function ``P(chi2_dof(kappa) > t)``; central when kappa == 0."""
    dof, kappa, t = float(dof), float(kappa), float(t)
    _check_finite_nonneg(kappa=kappa, t=t)
    if not math.isfinite(dof) or dof <= 0:
        raise ValueError(f"dof must be finite and > 0, got {dof}")
    if t == 0.0:
        return 1.0
    if kappa == 0.0:
        return float(sps.chi2.sf(t, dof))
    return float(sps.ncx2.sf(t, dof, kappa))


def tail_probability(dof: int, kappa: float, lam: float) -> float:
    """P(T > lam) for T ~ chi2_dof(kappa): Marcum Q for even dof, scipy for odd."""
    if dof % 2 == 0:
        return marcum_q(dof // 2, math.sqrt(kappa), math.sqrt(lam))
    return noncentral_chi2_sf(dof, kappa, lam)


def threshold_for_pfa(K: int, alpha: float, dof: int | None = None) -> float:
    """Detection threshold lambda with ``P(chi2_dof > lambda) = alpha``.

    ``dof`` defaults to 2K (complex data, ``Q_K(0, sqrt(lambda)) = alpha``);
    pass ``dof=K`` for real data.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    dof = 2 * K if dof is None else int(dof)
    if alpha == 1.0:
        return 0.0

    def excess(lam: float) -> float:
        return tail_probability(dof, 0.0, lam) - alpha

    hi = max(1.0, float(dof))
    while excess(hi) > 0:
        hi *= 2.0
    lam = optimize.brentq(excess, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(excess(lam)) > _ROOT_TOL:
        raise ArithmeticError(f"threshold search did not converge for alpha={alpha}")
    return float(lam)


def predicted_pd(K: int, kappa: float, lam: float, dof: int | None = None) -> float:
    """Predicted detection probability ``Q_K(sqrt(kappa), sqrt(lam))``.

    ``kappa`` is the noncentrality of the statistic itself (field scale
    included).  With an odd ``dof`` the noncentral chi-squared tail is used.
    """
    dof = 2 * K if dof is None else int(dof)
    _check_finite_nonneg(kappa=float(kappa), lam=float(lam))
    return tail_probability(dof, kappa, lam)


@dataclass(frozen=True)
class DetectionPerformance:
    lam: float
    p_fa: float
    p_d: float
    K: int
    kappa: float

    @classmethod
    def at_threshold(cls, K: int, kappa: float, lam: float, dof: int | None = None) -> "DetectionPerformance":
        return cls(
            lam=lam,
            p_fa=predicted_pd(K, 0.0, lam, dof),
            p_d=predicted_pd(K, kappa, lam, dof),
            K=K,
            kappa=kappa,
        )
