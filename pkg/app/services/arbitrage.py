"""
Asymptotic-arbitrage regime of a large Black-Scholes market and the explicit
set sequences that witness it.
"""

import logging
from typing import Optional, Sequence

from app.core.exceptions import ConfigError
from app.schemas.arbitrage import (
    ArbitrageFlags,
    ArbitrageVerdict,
    PowerPoint,
    Regime,
    SAABoundPoint,
    WitnessPoint,
)
from app.schemas.market import MarketSpec
from app.services.gaussian_analytics import (
    norm_cdf,
    norm_quantile,
    np_power_naa1,
    np_power_naa2,
    saa_limit_fn,
)
from app.services.model import series_converges, series_value, theta_scale

logger = logging.getLogger(__name__)

DEFAULT_WITNESS_GRID = (1, 2, 5, 10, 20, 50, 100)
SEPARATION_RULE = "eps_n = 1 - Phi(theta_scale_n / 2)"


def classify(spec: MarketSpec, witness_grid: Optional[Sequence[int]] = None) -> ArbitrageVerdict:
    """
    No asymptotic arbitrage of any kind when sum (b_i/sigma_i)^2 < inf, strong
    asymptotic arbitrage of both kinds otherwise. Divergent specs carry the
    separation witness over `witness_grid`.
    """
    converges = series_converges(spec)
    value = series_value(spec)
    regime = Regime.NO_ASYMPTOTIC_ARBITRAGE if converges else Regime.STRONG_ASYMPTOTIC_ARBITRAGE
    flags = ArbitrageFlags(NAA1=converges, NAA2=converges, NSAA1=converges, NSAA2=converges)
    logger.debug("series value %s -> %s", value, regime.value)

    witness = None
    rule = None
    if not converges:
        witness = separation_witness(spec, witness_grid or DEFAULT_WITNESS_GRID)
        rule = SEPARATION_RULE
    return ArbitrageVerdict(
        regime=regime,
        series_value=value,
        series_converges=converges,
        flags=flags,
        witness=witness,
        witness_rule=rule,
    )


def separation_witness(spec: MarketSpec, n_grid: Sequence[int]) -> list[WitnessPoint]:
    """
    Budgets eps_n = 1 - Phi(s_n / 2) with s_n = ||theta^n|| sqrt(T): the NP set
    of Q-mass eps_n then has P-mass Phi(s_n / 2), so both tend to their limits
    together when s_n grows without bound.
    """
    if series_converges(spec):
        raise ConfigError("convergent market price of risk: no separating sequence exists")
    points = []
    for n in n_grid:
        s = theta_scale(spec, n)
        eps = norm_cdf(-0.5 * s)
        # eps underflows to 0 once s/2 is far in the tail
        p_power = np_power_naa1(s, eps) if eps > 0.0 else 1.0
        points.append(WitnessPoint(n=n, theta_scale=s, eps_n=eps, p_power=p_power))
    return points


def contiguity_power_curve(spec: MarketSpec, n: int, eps_grid: Sequence[float]) -> list[PowerPoint]:
    """Best P-mass under a Q budget and best Q-mass under a P budget, per eps."""
    s = theta_scale(spec, n)
    return [
        PowerPoint(eps=eps, p_power=np_power_naa1(s, eps), q_power=np_power_naa2(s, eps))
        for eps in eps_grid
    ]


def weak_price_bound_saa(spec: MarketSpec, n_grid: Sequence[int], delta: float) -> list[SAABoundPoint]:
    """
    The factor exp(s_n^2/(2+delta)) Phi(ln s_n - s_n) that bounds the weak price
    of a claim with a bounded (4+delta)-moment; it vanishes as s_n grows.
    """
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    points = []
    for n in n_grid:
        s = theta_scale(spec, n)
        bound = saa_limit_fn(s, delta) if s > 0.0 else 0.0
        points.append(SAABoundPoint(n=n, theta_scale=s, bound=bound))
    return points


def required_theta_scale(eps: float, power: float) -> float:
    """Smallest s at which the NP set of Q-budget eps has P-mass >= power."""
    if not (0.0 < eps < 1.0 and 0.0 < power < 1.0):
        raise ConfigError("eps and power must lie in (0, 1)")
    return max(norm_quantile(power) - norm_quantile(eps), 0.0)


__all__ = [
    "classify",
    "contiguity_power_curve",
    "required_theta_scale",
    "separation_witness",
    "weak_price_bound_saa",
]
