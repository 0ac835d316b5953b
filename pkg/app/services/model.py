"""
Market-price-of-risk algebra and terminal sampling for the large
Black-Scholes market with constant coefficients.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from app.core.exceptions import ConfigError
from app.schemas.market import (
    ClaimSequence,
    ConstantTail,
    DensityEvaluation,
    GeometricTail,
    MarketSpec,
    Measure,
    PowerDecayTail,
    TerminalSample,
    ZeroTail,
)
from app.services.mc_engine import draw_normals

# longest power-decay stretch summed term by term in one block
_DIRECT_SUM_LIMIT = 1 << 20


# ---------------- ||theta^n||^2 and its limit ----------------


def _tail_partial(spec: MarketSpec, n: int) -> float:
    """sum_{m < i <= n} (b_i / sigma_i)^2 for the declared tail rule."""
    m = spec.head_size
    if n <= m:
        return 0.0
    rule = spec.tail_rule
    if isinstance(rule, ZeroTail):
        return 0.0
    if isinstance(rule, ConstantTail):
        return rule.c * rule.c * (n - m)
    if isinstance(rule, GeometricTail):
        r2 = rule.r * rule.r
        return r2 ** (m + 1) * (1.0 - r2 ** (n - m)) / (1.0 - r2)
    if isinstance(rule, PowerDecayTail):
        exponent = 2.0 * rule.p
        if n - m > _DIRECT_SUM_LIMIT and exponent > 1.0:
            return float(special.zeta(exponent, m + 1) - special.zeta(exponent, n + 1))
        partials = []
        for lo in range(m + 1, n + 1, _DIRECT_SUM_LIMIT):
            idx = np.arange(lo, min(lo + _DIRECT_SUM_LIMIT, n + 1), dtype=float)
            partials.append(math.fsum(idx ** (-exponent)))
        return math.fsum(partials)
    raise ConfigError(f"unsupported tail rule {rule!r}")


def theta_norm_sq(spec: MarketSpec, n: int) -> float:
    """||theta^n||^2 = sum_{i <= n} (b_i / sigma_i)^2."""
    if n < 1:
        raise ConfigError(f"market index must be >= 1, got {n}")
    head = math.fsum(r * r for r in spec.explicit_ratios[:n])
    return head + _tail_partial(spec, n)


def theta_scale(spec: MarketSpec, n: int) -> float:
    """||theta^n|| sqrt(T)."""
    return math.sqrt(theta_norm_sq(spec, n) * spec.horizon_T)


def series_converges(spec: MarketSpec) -> bool:
    """Whether sum_i (b_i / sigma_i)^2 < inf, decided from the tail rule."""
    rule = spec.tail_rule
    if isinstance(rule, ConstantTail):
        return rule.c == 0.0
    if isinstance(rule, PowerDecayTail):
        return 2.0 * rule.p > 1.0
    return True


def series_value(spec: MarketSpec) -> float:
    """sum_{i >= 1} (b_i / sigma_i)^2 in closed form; inf when divergent."""
    if not series_converges(spec):
        return math.inf
    m = spec.head_size
    head = math.fsum(r * r for r in spec.explicit_ratios)
    rule = spec.tail_rule
    if isinstance(rule, PowerDecayTail):
        # Hurwitz zeta: sum_{k >= 0} (k + m + 1)^(-2p)
        return head + float(special.zeta(2.0 * rule.p, m + 1))
    if isinstance(rule, GeometricTail):
        r2 = rule.r * rule.r
        return head + r2 ** (m + 1) / (1.0 - r2)
    return head


# ---------------- Sampling ----------------


def sample_terminal(spec: MarketSpec, n: int, seed: int, measure: Measure = Measure.P) -> TerminalSample:
    """
    One draw of W_T^n under `measure`, the density Z_n = dQ^n/dP^n at that point
    and the terminal prices S_T^i of every asset with a declared volatility.
    """
    if n < 1:
        raise ConfigError(f"market index must be >= 1, got {n}")
    horizon = spec.horizon_T
    theta = spec.ratios(n)
    gauss = draw_normals(seed, 0, 1, n)[0]
    if measure is Measure.P:
        w = math.sqrt(horizon) * gauss
        w_star = w + theta * horizon
    else:
        w_star = math.sqrt(horizon) * gauss
        w = w_star - theta * horizon
    theta_dot_w = math.fsum(theta * w)
    log_z = -theta_dot_w - 0.5 * theta_norm_sq(spec, n) * horizon
    prices: tuple[float, ...] = ()
    if spec.vols:
        prices = tuple(
            spec.spot(i) * math.exp(-0.5 * spec.vol(i) ** 2 * horizon + spec.vol(i) * w_star[i - 1])
            for i in range(1, n + 1)
        )
    return TerminalSample(
        measure=measure,
        brownian=tuple(w.tolist()),
        brownian_q=tuple(w_star.tolist()),
        density=DensityEvaluation.from_log(theta_dot_w, log_z),
        prices=prices,
    )


@dataclass(frozen=True)
class MarketDraws:
    """Rows start..stop-1 of a run: what a claim and the density need."""

    theta_dot_w: np.ndarray  # (theta^n, W_T^n)
    z: np.ndarray  # Z_n
    prices: np.ndarray  # (rows, m) terminal prices of the first m assets


def simulate_draws(
    spec: MarketSpec,
    n: int,
    claim: ClaimSequence,
    seed: int,
    start: int,
    stop: int,
    measure: Measure = Measure.P,
) -> MarketDraws:
    """
    Draws only the coordinates a claim reads plus one normal carrying the rest
    of (theta^n, W_T^n): the remaining n - m Brownian components enter Z_n only
    through their projection on theta, which is N(0, ||theta_rest||^2 T).
    """
    m = claim.assets_touched
    if m > n:
        raise ConfigError(f"claim reads asset {m} but market {n} has only {n} assets")
    if m > 0 and not spec.vols:
        raise ConfigError("pricing a non-constant claim needs vols in the market spec")
    horizon = spec.horizon_T
    root_t = math.sqrt(horizon)
    norm_sq = theta_norm_sq(spec, n)
    theta_head = spec.ratios(m) if m else np.empty(0)
    rest = math.sqrt(max(norm_sq - math.fsum(theta_head * theta_head), 0.0))

    gauss = draw_normals(seed, start, stop, m + 1)
    head = root_t * gauss[:, :m]
    if measure is Measure.P:
        w_star_head = head + theta_head * horizon
        theta_dot_w = head @ theta_head + rest * root_t * gauss[:, m]
    else:
        w_star_head = head
        theta_dot_w_star = head @ theta_head + rest * root_t * gauss[:, m]
        theta_dot_w = theta_dot_w_star - norm_sq * horizon
    z = np.exp(-theta_dot_w - 0.5 * norm_sq * horizon)

    prices = np.empty((stop - start, m))
    for j in range(m):
        sigma = spec.vol(j + 1)
        prices[:, j] = spec.spot(j + 1) * np.exp(-0.5 * sigma * sigma * horizon + sigma * w_star_head[:, j])
    return MarketDraws(theta_dot_w=theta_dot_w, z=z, prices=prices)
