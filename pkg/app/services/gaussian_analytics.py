"""
Closed-form Gaussian machinery of the large Black-Scholes market.

Every formula depends on the market only through the scale
s = ||theta^n|| sqrt(T) ("theta_scale"). Phi and its inverse come from
scipy.special (ndtr / ndtri / log_ndtr), which are deterministic and accurate
to a few ulps, including the far left tail of log Phi.
"""

import math

import numpy as np
from scipy import special

from app.core.exceptions import ConfigError
from app.schemas.gaussian import Coordinate, GaussianNPSet, HoelderExponents, TailDirection
from app.schemas.market import Measure


def norm_cdf(x):
    """Phi(x); scalar in, float out; arrays are mapped elementwise."""
    if np.ndim(x) == 0:
        return float(special.ndtr(x))
    return special.ndtr(np.asarray(x, dtype=float))


def norm_logcdf(x):
    if np.ndim(x) == 0:
        return float(special.log_ndtr(x))
    return special.log_ndtr(np.asarray(x, dtype=float))


def norm_quantile(u):
    """Phi^{-1}(u) for u in the open interval (0, 1)."""
    if np.ndim(u) == 0:
        if not 0.0 < u < 1.0:
            raise ConfigError(f"norm_quantile needs 0 < u < 1, got {u}")
        return float(special.ndtri(u))
    arr = np.asarray(u, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ConfigError("norm_quantile needs every u in (0, 1)")
    return special.ndtri(arr)


def _check(theta_scale: float, eps: float) -> None:
    if not theta_scale >= 0.0:
        raise ConfigError(f"theta_scale must be nonnegative, got {theta_scale}")
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")


# ---------------- Neyman-Pearson sets ----------------


def np_set_naa1(theta_scale: float, eps: float) -> GaussianNPSet:
    """
    Maximizes P(A) subject to Q(A) <= eps:
    A = {(theta, W*_T) >= ln(gamma) + s^2/2}, ln(gamma) = s Phi^{-1}(1-eps) - s^2/2.
    """
    _check(theta_scale, eps)
    s = theta_scale
    c = -s * norm_quantile(eps)  # s * Phi^{-1}(1 - eps)
    log_gamma = c - 0.5 * s * s
    return GaussianNPSet(
        direction=TailDirection.UPPER,
        coordinate=Coordinate.THETA_W_STAR,
        threshold_c=c,
        gamma=math.exp(min(log_gamma, 700.0)),
        log_gamma=log_gamma,
        budget_eps=eps,
        theta_scale=s,
        constrained=Measure.Q,
        constrained_mass=eps,
    )


def np_power_naa1(theta_scale: float, eps: float) -> float:
    """P(A_eps) = 1 - Phi(Phi^{-1}(1-eps) - s), evaluated as Phi(Phi^{-1}(eps) + s)."""
    _check(theta_scale, eps)
    return norm_cdf(norm_quantile(eps) + theta_scale)


def np_set_naa2(theta_scale: float, eps: float) -> GaussianNPSet:
    """
    Maximizes Q(A) subject to P(A) <= eps: A = {(theta, W_T) <= s Phi^{-1}(eps)},
    i.e. {dQ/dP >= gamma}.
    """
    _check(theta_scale, eps)
    s = theta_scale
    c = s * norm_quantile(eps)
    log_gamma = -c - 0.5 * s * s
    return GaussianNPSet(
        direction=TailDirection.LOWER,
        coordinate=Coordinate.THETA_W,
        threshold_c=c,
        gamma=math.exp(min(log_gamma, 700.0)),
        log_gamma=log_gamma,
        budget_eps=eps,
        theta_scale=s,
        constrained=Measure.P,
        constrained_mass=eps,
    )


def np_power_naa2(theta_scale: float, eps: float) -> float:
    """Q(A_eps) = Phi(Phi^{-1}(eps) + s)."""
    _check(theta_scale, eps)
    return norm_cdf(norm_quantile(eps) + theta_scale)


def np_set_min_q(theta_scale: float, eps: float) -> GaussianNPSet:
    """
    Minimizes Q(A) subject to P(A) >= 1 - eps: A = {dQ/dP <= gamma}
    = {(theta, W_T) >= s Phi^{-1}(eps)}, gamma = exp(-(Phi^{-1}(eps) s + s^2/2)).
    """
    _check(theta_scale, eps)
    s = theta_scale
    c = s * norm_quantile(eps)
    log_gamma = -c - 0.5 * s * s
    return GaussianNPSet(
        direction=TailDirection.UPPER,
        coordinate=Coordinate.THETA_W,
        threshold_c=c,
        gamma=math.exp(min(log_gamma, 700.0)),
        log_gamma=log_gamma,
        budget_eps=eps,
        theta_scale=s,
        constrained=Measure.P,
        constrained_mass=1.0 - eps,
    )


def np_power_min_q(theta_scale: float, eps: float) -> float:
    """Q(A_eps) = Phi(-Phi^{-1}(eps) - s)."""
    _check(theta_scale, eps)
    return norm_cdf(-norm_quantile(eps) - theta_scale)


# ---------------- Density moments and exponents ----------------


def z_moment(theta_scale: float, r: float) -> float:
    """E_P[Z^r] = exp(s^2 r (r-1) / 2)."""
    if r <= 0:
        raise ConfigError(f"moment order must be positive, got {r}")
    return math.exp(0.5 * theta_scale * theta_scale * r * (r - 1.0))


def optimal_hoelder_exponents(delta: float) -> HoelderExponents:
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    root = math.sqrt((2.0 + delta) / 2.0)
    p = 1.0 + root
    p_prime = (2.0 + 2.0 * root + delta) / (2.0 + delta)
    half_sqrt2 = math.sqrt(2.0) / 2.0
    pq_prime = half_sqrt2 + 0.5 * (4.0 + delta) + half_sqrt2 * math.sqrt(2.0 + delta)
    return HoelderExponents(delta=delta, p=p, p_prime=p_prime, pq_prime=pq_prime)


def saa_limit_fn(x, delta: float):
    """
    f(x) = exp(x^2/(2+delta)) Phi(ln x - x), evaluated in the log domain so it
    stays finite where Phi underflows.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ConfigError("saa_limit_fn needs x > 0")
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    log_value = arr * arr / (2.0 + delta) + special.log_ndtr(np.log(arr) - arr)
    value = np.exp(log_value)
    if np.ndim(x) == 0:
        return float(value)
    return value
