import math

import numpy as np
import pytest

from app.core.config import settings
from app.core.exceptions import AssumptionError, ConfigError, StatisticalError
from app.schemas.arbitrage import Regime
from app.schemas.market import ClaimSequence, MarketSpec
from app.schemas.mc import MCParams
from app.schemas.pricing import PriceMethod
from app.services.gaussian_analytics import norm_cdf, norm_quantile, optimal_hoelder_exponents
from app.services.pricing import (
    black_scholes_value,
    claim_atom_probability,
    claim_moment_bound,
    hoelder_exponent,
    lipschitz_constant,
    price_curve,
    price_equality_check,
    quantile_price,
    quantile_price_upper_bound_saa,
    strong_price,
    weak_price_trajectory,
)
from tests import payoffs

ALPHA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SIGMAS = 4.0
TRAJECTORY_GRID = (1, 2, 5, 10, 20, 50, 100)


def _exact_constant_price(s: float, alpha: float) -> float:
    return norm_cdf(norm_quantile(alpha) - s)


# ---------------- strong prices ----------------


def test_strong_price_of_a_constant(constant_tail_spec, unit_claim):
    for n in (1, 10, 1000):
        price = strong_price(constant_tail_spec, unit_claim, n)
        assert price.value == 1.0
        assert price.method is PriceMethod.CLOSED_FORM


def test_strong_price_of_an_at_the_money_call():
    spec = MarketSpec(ratios=(0.3,), vols=(0.2,), spots=(100.0,))
    price = strong_price(spec, ClaimSequence.call(100.0), 1)
    assert price.value == pytest.approx(100.0 * norm_cdf(0.1) - 100.0 * norm_cdf(-0.1), abs=1e-10)


def test_put_call_parity():
    call = black_scholes_value(100.0, 90.0, 0.25, 2.0, call=True)
    put = black_scholes_value(100.0, 90.0, 0.25, 2.0, call=False)
    assert call - put == pytest.approx(10.0, abs=1e-10)


def test_monte_carlo_strong_price_of_a_custom_claim(call_spec):
    params = MCParams(n_samples=200_000, seed=8, chunk_size=50_000)
    claim = ClaimSequence.custom(payoffs.first_asset, moment_bounded=True)
    price = strong_price(call_spec, claim, 1, params)
    assert price.method is PriceMethod.MONTE_CARLO
    assert abs(price.value - 1.0) <= SIGMAS * price.stderr
    with pytest.raises(ConfigError):
        strong_price(call_spec, claim, 1)


def test_divergent_monte_carlo_is_reported(call_spec):
    calls = []

    def spiky(prices: np.ndarray) -> np.ndarray:
        calls.append(len(prices))
        values = prices[:, 0].copy()
        if len(calls) > 1:
            values[0] = 1e6
        return values

    params = MCParams(n_samples=20_000, seed=8, chunk_size=10_000, max_workers=1)
    with pytest.raises(StatisticalError):
        strong_price(call_spec, ClaimSequence.custom(spiky), 1, params)


# ---------------- quantile prices ----------------


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_closed_form_constant_price(alpha, unit_claim):
    spec = MarketSpec.from_theta_scale(1.0)
    result = quantile_price(spec, unit_claim, 1, alpha)
    assert result.method is PriceMethod.CLOSED_FORM
    assert result.value == pytest.approx(_exact_constant_price(1.0, alpha), abs=1e-14)
    assert result.quantile_q == pytest.approx(math.exp(norm_quantile(alpha) - 0.5))
    assert result.set_p_mass == alpha


def test_constant_price_without_drift_is_alpha(unit_claim):
    result = quantile_price(MarketSpec.from_theta_scale(0.0), unit_claim, 1, 0.9)
    assert result.value == pytest.approx(0.9, abs=1e-12)


def test_constant_price_edges():
    spec = MarketSpec.from_theta_scale(1.0)
    full = quantile_price(spec, ClaimSequence.constant(2.0), 1, 1.0)
    assert full.value == 2.0
    assert full.quantile_q == math.inf
    assert quantile_price(spec, ClaimSequence.constant(2.0), 1, 0.0).value == 0.0
    zero = quantile_price(spec, ClaimSequence.constant(0.0), 1, 0.5)
    assert zero.value == 0.0 and zero.atom_alpha0 == 1.0


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0])
def test_monte_carlo_curve_matches_closed_form(s, mc_params, unit_claim):
    spec = MarketSpec.from_theta_scale(s)
    curve = price_curve(spec, unit_claim, 1, ALPHA_GRID, mc_params, method="monte_carlo", delta=4.0)
    assert curve.is_monotone()
    for point in curve.points:
        exact = _exact_constant_price(s, point.alpha)
        assert abs(point.value - exact) <= SIGMAS * point.stderr + 1e-12
        assert point.n_samples == 1_000_000
    for left, right in zip(curve.points, curve.points[1:]):
        slack = SIGMAS * (left.stderr + right.stderr) + 1e-12
        assert abs(right.value - left.value) <= curve.lipschitz_bound(left.alpha, right.alpha) + slack
        assert abs(right.value - left.value) <= curve.hoelder_bound(left.alpha, right.alpha) + slack


def test_curve_reports_lipschitz_constant(unit_claim):
    spec = MarketSpec.from_theta_scale(1.0)
    curve = price_curve(spec, unit_claim, 1, ALPHA_GRID, delta=1.0)
    exps = optimal_hoelder_exponents(1.0)
    assert curve.lipschitz_K == pytest.approx(math.exp(0.5 * (exps.p * exps.p_prime - 1.0)))
    assert curve.hoelder_exponent == pytest.approx((exps.p - 1.0) / exps.p)
    assert curve.values == sorted(curve.values)


def test_divergent_curve_has_no_lipschitz_constant(constant_tail_spec, unit_claim):
    curve = price_curve(constant_tail_spec, unit_claim, 4, (0.2, 0.8))
    assert curve.lipschitz_K is None
    assert curve.lipschitz_bound(0.2, 0.8) == math.inf


def test_call_price_is_zero_below_the_atom(call_spec, mc_params):
    claim = ClaimSequence.call(1.0)
    alpha0 = norm_cdf(-0.4)
    assert claim_atom_probability(call_spec, claim, 1) == pytest.approx(alpha0, abs=1e-12)

    result = quantile_price(call_spec, claim, 1, alpha0 / 2.0, mc_params)
    assert result.value == 0.0
    assert result.quantile_q == 0.0
    assert result.atom_alpha0_exact == pytest.approx(alpha0, abs=1e-12)
    tol = SIGMAS * math.sqrt(alpha0 * (1.0 - alpha0) / mc_params.n_samples)
    assert abs(result.atom_alpha0 - alpha0) <= tol


def test_put_atom_is_the_complement(call_spec):
    put = claim_atom_probability(call_spec, ClaimSequence.put(1.0), 1)
    assert put == pytest.approx(1.0 - norm_cdf(-0.4), abs=1e-12)


def test_full_level_recovers_strong_price(call_spec, mc_params):
    put = ClaimSequence.put(1.0)
    result = quantile_price(call_spec, put, 1, 1.0, mc_params)
    strong = strong_price(call_spec, put, 1)
    assert result.value <= strong.value + SIGMAS * result.stderr
    assert abs(result.value - strong.value) <= SIGMAS * result.stderr


def test_custom_claim_full_level(call_spec):
    params = MCParams(n_samples=200_000, seed=21, chunk_size=65_536)
    claim = ClaimSequence.custom(payoffs.first_asset, moment_bounded=True)
    result = quantile_price(call_spec, claim, 1, 1.0, params)
    # E_P[S_T Z] = E_Q[S_T] = S_0
    assert abs(result.value - 1.0) <= SIGMAS * result.stderr
    assert not result.upper_bound_only


def test_undeclared_moment_bound_gives_an_upper_bound(call_spec, small_mc_params):
    claim = ClaimSequence.custom(payoffs.first_asset)
    result = quantile_price(call_spec, claim, 1, 0.5, small_mc_params)
    assert result.upper_bound_only
    with pytest.raises(AssumptionError):
        lipschitz_constant(call_spec, claim, 1)


def test_discontinuous_law_is_rejected(call_spec, small_mc_params):
    claim = ClaimSequence.custom(payoffs.first_asset, continuous=False)
    with pytest.raises(AssumptionError):
        quantile_price(call_spec, claim, 1, 0.5, small_mc_params)


def test_results_do_not_depend_on_chunking(call_spec):
    claim = ClaimSequence.call(1.0)
    base = MCParams(n_samples=50_000, seed=3, chunk_size=50_000, max_workers=1)
    split = MCParams(n_samples=50_000, seed=3, chunk_size=1_000, max_workers=3)
    for alpha in (0.5, 0.9):
        assert quantile_price(call_spec, claim, 1, alpha, base) == quantile_price(call_spec, claim, 1, alpha, split)


def test_two_pass_estimator(unit_claim):
    params = MCParams(n_samples=1_000_000, seed=12345, two_pass=True, max_workers=4)
    result = quantile_price(MarketSpec.from_theta_scale(1.0), unit_claim, 1, 0.5, params, method="monte_carlo")
    # the first-half quantile adds its own error on top of the reported stderr
    assert result.stderr > 0.0
    assert abs(result.value - norm_cdf(-1.0)) <= 3e-3

    flat = quantile_price(MarketSpec.from_theta_scale(0.0), unit_claim, 1, 0.3, params, method="monte_carlo")
    assert flat.value == pytest.approx(0.3, abs=1e-12)
    assert flat.stderr == 0.0


def test_invalid_pricing_requests(call_spec, unit_claim):
    with pytest.raises(ConfigError):
        quantile_price(call_spec, unit_claim, 1, 1.5)
    with pytest.raises(ConfigError):
        quantile_price(call_spec, unit_claim, 0, 0.5)
    with pytest.raises(ConfigError):
        quantile_price(call_spec, ClaimSequence.call(1.0), 1, 0.5)
    with pytest.raises(ConfigError):
        quantile_price(call_spec, ClaimSequence.call(1.0), 1, 0.5, method="closed_form")


# ---------------- Lipschitz constant ----------------


def test_lipschitz_constant_without_drift():
    spec = MarketSpec.from_theta_scale(0.0)
    assert lipschitz_constant(spec, ClaimSequence.constant(2.0), 1, delta=1.0) == pytest.approx(2.0)


def test_lipschitz_constant_at_the_limit_dominates(power_decay_spec, unit_claim):
    at_n = lipschitz_constant(power_decay_spec, unit_claim, 5, delta=1.0)
    at_limit = lipschitz_constant(power_decay_spec, unit_claim, 5, delta=1.0, at_limit=True)
    assert at_limit > at_n > 1.0


def test_lipschitz_constant_needs_convergence(constant_tail_spec, unit_claim):
    with pytest.raises(ConfigError):
        lipschitz_constant(constant_tail_spec, unit_claim, 1)


def test_lipschitz_constant_uses_one_set_of_exponents(call_spec):
    exps = optimal_hoelder_exponents(1.0)
    call = ClaimSequence.call(1.0)
    k1 = math.exp(0.5 * 0.25 * (exps.p * exps.p_prime - 1.0))
    k = lipschitz_constant(call_spec, call, 1, delta=1.0)
    assert k == pytest.approx(k1 * claim_moment_bound(call_spec, call, 1, exps.moment_exponent))
    # the order-(1 + delta) moment understates ||H Z||_p for a call
    assert k > k1 * claim_moment_bound(call_spec, call, 1, 2.0)


def test_moment_bounds(call_spec):
    assert claim_moment_bound(call_spec, ClaimSequence.put(2.0), 1, 2.0) == 2.0
    call_bound = claim_moment_bound(call_spec, ClaimSequence.call(1.0), 1, 2.0)
    # (E_P[S_T^2])^(1/2) with drift b = 0.1
    assert call_bound == pytest.approx(math.exp(0.1 - 0.02 + 0.04))
    with pytest.raises(ConfigError):
        claim_moment_bound(call_spec, ClaimSequence.put(2.0), 1, 0.0)


# ---------------- weak prices ----------------


def test_weak_price_converges_on_arbitrage_free_market(power_decay_spec, unit_claim):
    trajectory = weak_price_trajectory(power_decay_spec, unit_claim, TRAJECTORY_GRID)
    assert trajectory.regime is Regime.NO_ASYMPTOTIC_ARBITRAGE
    for point in trajectory.points:
        assert point.eps_n == pytest.approx(1.0 / (point.n + 1))
        assert point.strong_price == 1.0
        assert abs(point.strong_price - point.value) <= point.gap_bound
    gaps = [1.0 - p.value for p in trajectory.points]
    assert gaps == sorted(gaps, reverse=True)


def test_weak_price_gap_bound_at_default_delta(power_decay_spec, unit_claim):
    d = settings.LIPSCHITZ_DELTA
    trajectory = weak_price_trajectory(power_decay_spec, unit_claim, (1, 10, 100, 1000))
    k = lipschitz_constant(power_decay_spec, unit_claim, 1, delta=d, at_limit=True)
    for point in trajectory.points:
        assert abs(point.strong_price - point.value) <= point.gap_bound
        assert point.gap_bound == pytest.approx(k * point.eps_n ** hoelder_exponent(d))
    assert 0.0 < hoelder_exponent(d) < 1.0
    assert price_equality_check(power_decay_spec, unit_claim, (1, 10, 100)).prices_agree


def test_weak_price_without_drift(unit_claim):
    trajectory = weak_price_trajectory(MarketSpec.from_theta_scale(0.0), unit_claim, (1, 9, 99))
    for point in trajectory.points:
        assert point.value == pytest.approx(point.alpha_n, abs=1e-12)
        assert 1.0 - point.value <= point.gap_bound + 1e-12


def test_weak_price_vanishes_under_strong_arbitrage(constant_tail_spec, unit_claim):
    trajectory = weak_price_trajectory(constant_tail_spec, unit_claim, (4, 25, 100, 400))
    assert trajectory.regime is Regime.STRONG_ASYMPTOTIC_ARBITRAGE
    assert trajectory.trend == "tends_to_zero"
    for point in trajectory.points:
        s = point.theta_scale
        assert point.eps_n == pytest.approx(norm_cdf(-math.log(s)))
        assert point.value == pytest.approx(norm_cdf(math.log(s) - s), rel=1e-6, abs=1e-300)
        assert point.gap_bound is None
    values = [p.value for p in trajectory.points]
    assert values == sorted(values, reverse=True)
    assert values[-1] < 1e-50


def test_price_equality(power_decay_spec, constant_tail_spec, unit_claim):
    agree = price_equality_check(power_decay_spec, unit_claim, TRAJECTORY_GRID)
    assert agree.hypotheses_hold
    assert agree.prices_agree

    apart = price_equality_check(constant_tail_spec, unit_claim, (100, 400))
    assert not apart.naa2
    assert not apart.hypotheses_hold
    assert not apart.prices_agree
    with pytest.raises(ConfigError):
        price_equality_check(power_decay_spec, unit_claim, ())


def test_saa_upper_bound(constant_tail_spec, call_spec):
    points = quantile_price_upper_bound_saa(constant_tail_spec, ClaimSequence.constant(3.0), (1, 4, 100))
    assert points[-1].bound == pytest.approx(3.0 * points[-1].eps_n)
    assert points[-1].eps_n < 1e-6
    assert points[-1].p_power > 1.0 - 1e-6
    with pytest.raises(ConfigError):
        quantile_price_upper_bound_saa(call_spec, ClaimSequence.call(1.0), (1,))
