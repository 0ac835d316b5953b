"""
Strong, weak and alpha-quantile prices of stationary claims on the large
Black-Scholes market.

The alpha-quantile price at market n is E[H_n Z_n 1{H_n Z_n <= q_n(alpha)}]
with q_n(alpha) the alpha-quantile of H_n Z_n under P^n. Constant claims have
a closed form; everything else goes through the Monte Carlo engine, reusing
one sample of H_n Z_n for a whole alpha-grid.
"""

import logging
import math
from functools import reduce
from typing import Literal, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import AssumptionError, ConfigError, StatisticalError
from app.schemas.arbitrage import Regime
from app.schemas.market import (
    CallClaim,
    ClaimSequence,
    ConstantClaim,
    MarketSpec,
    Measure,
    PutClaim,
)
from app.schemas.mc import MCParams
from app.schemas.pricing import (
    PriceCurve,
    PriceEqualityCheck,
    PriceEstimate,
    PriceMethod,
    QuantilePriceResult,
    SAAPriceBoundPoint,
    TrajectoryPoint,
    WeakPriceTrajectory,
)
from app.services.arbitrage import separation_witness
from app.services.gaussian_analytics import norm_cdf, norm_quantile, optimal_hoelder_exponents
from app.services.mc_engine import ExactAccumulator, map_chunks, order_rank
from app.services.model import (
    series_converges,
    series_value,
    simulate_draws,
    theta_norm_sq,
    theta_scale,
)

logger = logging.getLogger(__name__)

PriceMode = Literal["auto", "closed_form", "monte_carlo"]

# the full-sample standard error must at least not exceed the half-sample one
_DIVERGENCE_RATIO = 1.0


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")


def _check_n(n: int) -> None:
    if n < 1:
        raise ConfigError(f"market index must be >= 1, got {n}")


def _asset_params(spec: MarketSpec, claim_kind, n: int) -> tuple[float, float, float]:
    """(S_0, sigma, b) of the asset an option is written on."""
    if claim_kind.asset > n:
        raise ConfigError(f"claim reads asset {claim_kind.asset} but market {n} has only {n} assets")
    if not spec.vols:
        raise ConfigError("pricing an option needs vols in the market spec")
    i = claim_kind.asset
    return spec.spot(i), spec.vol(i), spec.drift(i)


def _need_params(mc_params: Optional[MCParams], what: str) -> MCParams:
    if mc_params is None:
        raise ConfigError(f"{what} needs Monte Carlo parameters (seed and sample count)")
    return mc_params


# ---------------- Closed forms ----------------


def black_scholes_value(spot: float, strike: float, sigma: float, horizon: float, call: bool = True) -> float:
    """Discounted E^Q[(S_T - K)^+] (or the put) with zero interest rate."""
    sd = sigma * math.sqrt(horizon)
    d1 = (math.log(spot / strike) + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    if call:
        return spot * norm_cdf(d1) - strike * norm_cdf(d2)
    return strike * norm_cdf(-d2) - spot * norm_cdf(-d1)


def claim_atom_probability(spec: MarketSpec, claim: ClaimSequence, n: int) -> Optional[float]:
    """
    P^n(H_n = 0) in closed form: P(S_T <= K) for a call, P(S_T >= K) for a put.
    None for custom payoffs.
    """
    kind = claim.kind
    if isinstance(kind, ConstantClaim):
        return 1.0 if kind.c == 0.0 else 0.0
    if isinstance(kind, (CallClaim, PutClaim)):
        spot, sigma, drift = _asset_params(spec, kind, n)
        horizon = spec.horizon_T
        z = (math.log(kind.strike / spot) - (drift - 0.5 * sigma * sigma) * horizon) / (sigma * math.sqrt(horizon))
        below = norm_cdf(z)
        return below if isinstance(kind, CallClaim) else 1.0 - below
    return None


def claim_sup(claim: ClaimSequence) -> Optional[float]:
    """sup H_n for bounded claims, None otherwise."""
    kind = claim.kind
    if isinstance(kind, ConstantClaim):
        return kind.c
    if isinstance(kind, PutClaim):
        return kind.strike
    return None


def claim_moment_bound(
    spec: MarketSpec,
    claim: ClaimSequence,
    n: int,
    order: float,
    mc_params: Optional[MCParams] = None,
) -> float:
    """
    An upper bound for (E_P[H_n^order])^(1/order): exact for constants,
    (E_P[S_T^order])^(1/order) for a call, the strike for a put, Monte Carlo
    for custom payoffs.
    """
    if order <= 0:
        raise ConfigError(f"moment order must be positive, got {order}")
    kind = claim.kind
    if isinstance(kind, ConstantClaim):
        return kind.c
    if isinstance(kind, PutClaim):
        return kind.strike
    if isinstance(kind, CallClaim):
        spot, sigma, drift = _asset_params(spec, kind, n)
        horizon = spec.horizon_T
        return spot * math.exp((drift - 0.5 * sigma * sigma) * horizon + 0.5 * order * sigma * sigma * horizon)
    params = _need_params(mc_params, "the moment of a custom claim")

    def work(start: int, stop: int) -> ExactAccumulator:
        draws = simulate_draws(spec, n, claim, params.seed, start, stop)
        return ExactAccumulator().push(claim.evaluate(draws.prices) ** order)

    acc = reduce(ExactAccumulator.merge, map_chunks(params, work))
    return acc.mean() ** (1.0 / order)


def _closed_form_quantile(spec: MarketSpec, claim: ClaimSequence, n: int, alpha: float) -> QuantilePriceResult:
    """c Phi(Phi^{-1}(alpha) - s) for H = c: Q-mass of the NP set of P-mass alpha."""
    kind = claim.kind
    if not isinstance(kind, ConstantClaim):
        raise ConfigError("closed-form quantile prices exist only for constant claims")
    s = theta_scale(spec, n)
    c = kind.c
    if c == 0.0 or alpha == 0.0:
        value, quantile = 0.0, 0.0
    elif alpha == 1.0:
        value = c
        quantile = math.inf if s > 0.0 else c
    else:
        x = norm_quantile(alpha)
        value = c * norm_cdf(x - s)
        quantile = c * math.exp(s * x - 0.5 * s * s)
    atom = 1.0 if c == 0.0 else 0.0
    return QuantilePriceResult(
        alpha=alpha,
        n=n,
        value=value,
        quantile_q=quantile,
        stderr=0.0,
        method=PriceMethod.CLOSED_FORM,
        atom_alpha0=atom,
        atom_alpha0_exact=atom,
        set_p_mass=alpha,
    )


# ---------------- Monte Carlo ----------------


def sample_payout_density(spec: MarketSpec, claim: ClaimSequence, n: int, params: MCParams) -> np.ndarray:
    """H_n Z_n under P^n for samples 0..N-1 of the run, in sample order."""

    def work(start: int, stop: int) -> np.ndarray:
        draws = simulate_draws(spec, n, claim, params.seed, start, stop)
        return claim.evaluate(draws.prices) * draws.z

    return np.concatenate(map_chunks(params, work))


class _Sample:
    """One run of H_n Z_n prepared for any number of alpha levels."""

    def __init__(self, values: np.ndarray, params: MCParams) -> None:
        self.params = params
        self.size = values.size
        self.alpha0 = float(np.count_nonzero(values == 0.0)) / values.size
        if params.two_pass:
            half = values.size // 2
            self.first = np.sort(values[:half])
            self.second = values[half:]
        else:
            self.sorted = np.sort(values)

    def _zero(self, alpha: float) -> tuple[float, float, float, float]:
        return 0.0, 0.0, 0.0, order_rank(alpha, self.size) / self.size

    def point(self, alpha: float) -> tuple[float, float, float, float]:
        """(value, stderr, quantile, P-mass of the set) at alpha."""
        if alpha == 0.0 or alpha <= self.alpha0:
            return self._zero(alpha)
        if self.params.two_pass:
            return self._two_pass(alpha)
        n_total = self.size
        k = order_rank(alpha, n_total)
        kept = self.sorted[:k]
        q = float(kept[-1])
        value = float(ExactAccumulator().push(kept).total() / n_total)
        # influence values (Y - q) 1{rank <= k}
        influence = ExactAccumulator().push(kept - q).merge(ExactAccumulator().push(np.zeros(n_total - k)))
        stderr = math.sqrt(influence.variance() / n_total)
        return value, stderr, q, k / n_total

    def _two_pass(self, alpha: float) -> tuple[float, float, float, float]:
        first, second = self.first, self.second
        k = order_rank(alpha, first.size)
        q = float(first[k - 1])
        below = int(np.searchsorted(first, q, side="left"))
        ties = int(np.searchsorted(first, q, side="right")) - below
        # share of the tied block at q that the first half put inside the set
        weight = (k - below) / ties
        inside = np.where(second < q, 1.0, 0.0) + np.where(second == q, weight, 0.0)
        est = ExactAccumulator().push(second * inside).estimate(self.params.seed)
        return est.mean, est.stderr, q, float(inside.mean())


def _mc_result(
    sample: _Sample,
    alpha: float,
    n: int,
    atom_exact: Optional[float],
    upper_bound_only: bool,
) -> QuantilePriceResult:
    value, stderr, quantile, mass = sample.point(alpha)
    return QuantilePriceResult(
        alpha=alpha,
        n=n,
        value=max(value, 0.0),
        quantile_q=max(quantile, 0.0),
        stderr=stderr,
        method=PriceMethod.MONTE_CARLO,
        atom_alpha0=sample.alpha0,
        atom_alpha0_exact=atom_exact,
        set_p_mass=min(max(mass, 0.0), 1.0),
        upper_bound_only=upper_bound_only,
        n_samples=sample.size,
    )


def _choose_method(claim: ClaimSequence, method: PriceMode) -> PriceMethod:
    if method == "auto":
        return PriceMethod.CLOSED_FORM if isinstance(claim.kind, ConstantClaim) else PriceMethod.MONTE_CARLO
    if method == "closed_form":
        if not isinstance(claim.kind, ConstantClaim):
            raise ConfigError("closed-form quantile prices exist only for constant claims")
        return PriceMethod.CLOSED_FORM
    if method == "monte_carlo":
        return PriceMethod.MONTE_CARLO
    raise ConfigError(f"unknown pricing method {method!r}")


def _check_claim(claim: ClaimSequence) -> bool:
    """Raises when the continuity assumption fails; returns the upper-bound flag."""
    if not claim.has_continuous_law:
        raise AssumptionError("H_n Z_n must have a continuous distribution on (0, inf)")
    if not claim.moment_bound_holds:
        logger.warning("claim declares no moment bound: the constant-alpha value is only an upper bound")
        return True
    return False


# ---------------- Public operations ----------------


def strong_price(
    spec: MarketSpec,
    claim: ClaimSequence,
    n: int,
    mc_params: Optional[MCParams] = None,
) -> PriceEstimate:
    """
    E^{Q^n}[H_n]: exact for constants, Black-Scholes for calls and puts, Monte
    Carlo under Q^n for custom payoffs.
    """
    _check_n(n)
    kind = claim.kind
    if isinstance(kind, ConstantClaim):
        return PriceEstimate(n=n, value=kind.c, method=PriceMethod.CLOSED_FORM)
    if isinstance(kind, (CallClaim, PutClaim)):
        spot, sigma, _ = _asset_params(spec, kind, n)
        value = black_scholes_value(spot, kind.strike, sigma, spec.horizon_T, call=isinstance(kind, CallClaim))
        return PriceEstimate(n=n, value=max(value, 0.0), method=PriceMethod.CLOSED_FORM)
    return _mc_strong_price(spec, claim, n, _need_params(mc_params, "pricing a custom claim"))


def _mc_strong_price(spec: MarketSpec, claim: ClaimSequence, n: int, params: MCParams) -> PriceEstimate:
    half = params.n_samples // 2

    def work(start: int, stop: int) -> tuple[ExactAccumulator, ExactAccumulator]:
        draws = simulate_draws(spec, n, claim, params.seed, start, stop, measure=Measure.Q)
        payout = claim.evaluate(draws.prices)
        cut = min(max(half - start, 0), stop - start)
        return ExactAccumulator().push(payout[:cut]), ExactAccumulator().push(payout[cut:])

    parts = map_chunks(params, work)
    first = reduce(ExactAccumulator.merge, [p[0] for p in parts])
    full = first.merge(reduce(ExactAccumulator.merge, [p[1] for p in parts]))
    est = full.estimate(params.seed)
    half_stderr = math.sqrt(first.variance() / first.count)
    if not math.isfinite(est.mean) or (half_stderr > 0.0 and est.stderr > _DIVERGENCE_RATIO * half_stderr):
        logger.warning("strong price: stderr %.3g on N vs %.3g on N/2", est.stderr, half_stderr)
        raise StatisticalError("Monte Carlo strong price does not converge: stderr fails to shrink with N")
    return PriceEstimate(
        n=n,
        value=max(est.mean, 0.0),
        stderr=est.stderr,
        method=PriceMethod.MONTE_CARLO,
        n_samples=est.n_effective,
    )


def quantile_price(
    spec: MarketSpec,
    claim: ClaimSequence,
    n: int,
    alpha: float,
    mc_params: Optional[MCParams] = None,
    method: PriceMode = "auto",
) -> QuantilePriceResult:
    """
    alpha-quantile price at market n for the constant sequence beta_n = alpha.
    Monte Carlo returns exactly 0 whenever alpha does not exceed the sampled
    mass of H_n Z_n at zero.
    """
    _check_n(n)
    _check_alpha(alpha)
    upper_bound_only = _check_claim(claim)
    chosen = _choose_method(claim, method)
    if chosen is PriceMethod.CLOSED_FORM:
        result = _closed_form_quantile(spec, claim, n, alpha)
        return result.model_copy(update={"upper_bound_only": upper_bound_only})
    params = _need_params(mc_params, "Monte Carlo quantile pricing")
    sample = _Sample(sample_payout_density(spec, claim, n, params), params)
    return _mc_result(sample, alpha, n, claim_atom_probability(spec, claim, n), upper_bound_only)


def price_curve(
    spec: MarketSpec,
    claim: ClaimSequence,
    n: int,
    alpha_grid: Sequence[float],
    mc_params: Optional[MCParams] = None,
    method: PriceMode = "auto",
    delta: Optional[float] = None,
) -> PriceCurve:
    """Quantile prices over an alpha-grid from a single sample of H_n Z_n."""
    _check_n(n)
    for alpha in alpha_grid:
        _check_alpha(alpha)
    upper_bound_only = _check_claim(claim)
    chosen = _choose_method(claim, method)
    if chosen is PriceMethod.CLOSED_FORM:
        points = [
            _closed_form_quantile(spec, claim, n, a).model_copy(update={"upper_bound_only": upper_bound_only})
            for a in alpha_grid
        ]
    else:
        params = _need_params(mc_params, "Monte Carlo quantile pricing")
        sample = _Sample(sample_payout_density(spec, claim, n, params), params)
        atom = claim_atom_probability(spec, claim, n)
        points = [_mc_result(sample, a, n, atom, upper_bound_only) for a in alpha_grid]

    lipschitz_k = None
    exponent = None
    if series_converges(spec) and claim.moment_bound_holds:
        d = settings.LIPSCHITZ_DELTA if delta is None else delta
        lipschitz_k = lipschitz_constant(spec, claim, n, d, mc_params=mc_params)
        exponent = hoelder_exponent(d)
    return PriceCurve(n=n, points=points, lipschitz_K=lipschitz_k, hoelder_exponent=exponent)


def hoelder_exponent(delta: float) -> float:
    """1/q = (p - 1)/p for the p of optimal_hoelder_exponents(delta)."""
    p = optimal_hoelder_exponents(delta).p
    return (p - 1.0) / p


def lipschitz_constant(
    spec: MarketSpec,
    claim: ClaimSequence,
    n: int,
    delta: Optional[float] = None,
    at_limit: bool = False,
    mc_params: Optional[MCParams] = None,
) -> float:
    """
    K1 K2 with K1 = (E[Z_n^(p p')])^(1/(p p')) = exp(s^2 (p p' - 1) / 2) and
    K2 = (E[H_n^(p q')])^(1/(p q')), p and p' from
    optimal_hoelder_exponents(delta). Both factors use the same exponents, so
    ||H_n Z_n||_p <= K1 K2. `at_limit` evaluates K1 at
    s^2 = sum_i (b_i/sigma_i)^2 T, which bounds every n.
    """
    _check_n(n)
    d = settings.LIPSCHITZ_DELTA if delta is None else delta
    if not series_converges(spec):
        raise ConfigError("divergent market price of risk: K1 is unbounded in n")
    if not claim.moment_bound_holds:
        raise AssumptionError("claim declares no finite moment bound")
    exponents = optimal_hoelder_exponents(d)
    if at_limit:
        s_sq = series_value(spec) * spec.horizon_T
    else:
        s_sq = theta_norm_sq(spec, n) * spec.horizon_T
    k1 = math.exp(0.5 * s_sq * (exponents.p * exponents.p_prime - 1.0))
    k2 = claim_moment_bound(spec, claim, n, exponents.moment_exponent, mc_params)
    return k1 * k2


def _trajectory_schedule(spec: MarketSpec, n: int) -> tuple[float, float]:
    """(s_n, eps_n) along the schedule used for the weak price."""
    s = theta_scale(spec, n)
    if series_converges(spec):
        return s, 1.0 / (n + 1)
    if s <= 1.0:
        logger.warning("theta_scale %.4g <= 1 at n=%d: eps_n = Phi(-ln s) is at least 1/2", s, n)
    if s == 0.0:
        return s, 1.0
    return s, norm_cdf(-math.log(s))


def weak_price_trajectory(
    spec: MarketSpec,
    claim: ClaimSequence,
    n_grid: Sequence[int],
    mc_params: Optional[MCParams] = None,
    delta: Optional[float] = None,
) -> WeakPriceTrajectory:
    """
    Quantile prices at alpha_n = 1 - eps_n along n_grid. Convergent specs use
    eps_n = 1/(n+1) and report the gap bound K1 K2 eps_n^((p-1)/p) with K1 at
    the limit; divergent specs use eps_n = Phi(-ln s_n), along which the price
    tends to 0.
    """
    converges = series_converges(spec)
    d = settings.LIPSCHITZ_DELTA if delta is None else delta
    exponent = hoelder_exponent(d)
    points = []
    for n in n_grid:
        s, eps = _trajectory_schedule(spec, n)
        alpha = 1.0 - eps
        price = quantile_price(spec, claim, n, alpha, mc_params)
        strong = strong_price(spec, claim, n, mc_params)
        gap_bound = None
        if converges and claim.moment_bound_holds:
            # strong - weak = E[H Z 1{HZ > q}] <= ||H Z||_p P(HZ > q)^(1/q)
            k = lipschitz_constant(spec, claim, n, d, at_limit=True, mc_params=mc_params)
            gap_bound = k * eps**exponent
        points.append(
            TrajectoryPoint(
                n=n,
                theta_scale=s,
                eps_n=eps,
                alpha_n=alpha,
                value=price.value,
                stderr=price.stderr,
                strong_price=strong.value,
                gap_bound=gap_bound,
            )
        )
    if converges:
        regime, schedule, trend = Regime.NO_ASYMPTOTIC_ARBITRAGE, "eps_n = 1/(n+1)", "converges_to_strong_price"
    else:
        regime, schedule, trend = Regime.STRONG_ASYMPTOTIC_ARBITRAGE, "eps_n = Phi(-ln theta_scale_n)", "tends_to_zero"
    return WeakPriceTrajectory(regime=regime, schedule=schedule, trend=trend, points=points)


def price_equality_check(
    spec: MarketSpec,
    claim: ClaimSequence,
    n_grid: Sequence[int],
    mc_params: Optional[MCParams] = None,
    delta: Optional[float] = None,
) -> PriceEqualityCheck:
    """
    Compares the last weak-price trajectory point with the strong price. On a
    complete market NAA2 and a bounded claim guarantee agreement in the limit.
    """
    if not n_grid:
        raise ConfigError("n_grid must not be empty")
    trajectory = weak_price_trajectory(spec, claim, n_grid, mc_params, delta)
    last = trajectory.points[-1]
    naa2 = series_converges(spec)
    bounded = claim_sup(claim) is not None
    tolerance = max(last.gap_bound or 0.0, 3.0 * last.stderr) + 1e-12
    return PriceEqualityCheck(
        naa2=naa2,
        bounded_claim=bounded,
        hypotheses_hold=naa2 and bounded,
        weak_price=last.value,
        strong_price=last.strong_price,
        tolerance=tolerance,
        prices_agree=abs(last.strong_price - last.value) <= tolerance,
    )


def quantile_price_upper_bound_saa(
    spec: MarketSpec,
    claim: ClaimSequence,
    n_grid: Sequence[int],
) -> list[SAAPriceBoundPoint]:
    """
    For a claim bounded by K on a divergent spec, hedging only on the
    separating set costs at most K Q^n(A_n) = K eps_n while succeeding with
    P^n-probability p_power -> 1.
    """
    bound = claim_sup(claim)
    if bound is None:
        raise ConfigError("claim is not bounded")
    return [
        SAAPriceBoundPoint(n=w.n, eps_n=w.eps_n, p_power=w.p_power, bound=bound * w.eps_n)
        for w in separation_witness(spec, n_grid)
    ]


__all__ = [
    "black_scholes_value",
    "claim_atom_probability",
    "claim_moment_bound",
    "claim_sup",
    "hoelder_exponent",
    "lipschitz_constant",
    "price_curve",
    "price_equality_check",
    "quantile_price",
    "quantile_price_upper_bound_saa",
    "sample_payout_density",
    "strong_price",
    "weak_price_trajectory",
]
