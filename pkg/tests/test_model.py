import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.schemas.market import ClaimSequence, MarketSpec, Measure, parse_claim, parse_tail
from app.services.model import (
    sample_terminal,
    series_converges,
    series_value,
    simulate_draws,
    theta_norm_sq,
    theta_scale,
)
from tests import payoffs


def test_constant_tail_grows_linearly(constant_tail_spec):
    assert theta_norm_sq(constant_tail_spec, 100) == 100.0
    assert theta_scale(constant_tail_spec, 25) == 5.0
    assert not series_converges(constant_tail_spec)
    assert series_value(constant_tail_spec) == math.inf


def test_head_then_tail():
    spec = MarketSpec(ratios=(0.5, 0.5), tail="constant:2")
    assert theta_norm_sq(spec, 1) == pytest.approx(0.25)
    assert theta_norm_sq(spec, 4) == pytest.approx(8.5)


def test_power_decay_series(power_decay_spec):
    assert series_converges(power_decay_spec)
    assert series_value(power_decay_spec) == pytest.approx(math.pi**2 / 6, abs=1e-12)
    assert theta_norm_sq(power_decay_spec, 10_000) == pytest.approx(math.pi**2 / 6, abs=1e-3)


def test_power_decay_with_head_uses_shifted_zeta():
    spec = MarketSpec(ratios=(2.0,), tail="power:1")
    assert series_value(spec) == pytest.approx(4.0 + math.pi**2 / 6 - 1.0, abs=1e-12)


def test_slow_power_decay_diverges():
    spec = MarketSpec(tail="power:0.5")
    assert not series_converges(spec)
    assert series_value(spec) == math.inf


def test_geometric_tail():
    spec = MarketSpec(tail="geometric:0.5")
    assert theta_norm_sq(spec, 3) == pytest.approx(0.328125)
    assert series_value(spec) == pytest.approx(1.0 / 3.0)


def test_zero_tail_and_explicit_head():
    spec = MarketSpec(ratios=(0.3, 0.4))
    assert theta_norm_sq(spec, 50) == pytest.approx(0.25)
    assert series_value(spec) == pytest.approx(0.25)


def test_horizon_enters_theta_scale():
    spec = MarketSpec.from_theta_scale(1.5, horizon_T=4.0)
    assert theta_scale(spec, 1) == pytest.approx(1.5)
    assert theta_scale(spec, 7) == pytest.approx(1.5)


def test_spec_from_json_document():
    spec = MarketSpec.model_validate_json(
        '{"ratios": [0.5], "tail": {"kind": "power", "p": 1}, "T": 2, "vols": [0.2, 0.3], "spots": [100]}'
    )
    assert spec.horizon_T == 2.0
    assert spec.vol(1) == 0.2
    # volatilities and spots beyond the head repeat the last value / default to 1
    assert spec.vol(5) == 0.3
    assert spec.spot(3) == 1.0
    assert spec.drift(1) == pytest.approx(0.1)


@pytest.mark.parametrize("bad", ["bogus", "power", "constant:"])
def test_unknown_tail_rule_is_rejected(bad):
    with pytest.raises(ValidationError):
        MarketSpec(tail=bad)


def test_parse_tail_shorthand():
    assert parse_tail("const:2") == {"kind": "constant", "c": 2.0}
    assert parse_tail("zero") == {"kind": "zero"}


def test_market_index_must_be_positive(constant_tail_spec):
    with pytest.raises(ConfigError):
        theta_norm_sq(constant_tail_spec, 0)


def test_claim_descriptors():
    assert parse_claim("call:100") == {"kind": "call", "asset": 1, "strike": 100.0}
    assert parse_claim("put:2:90") == {"kind": "put", "asset": 2, "strike": 90.0}
    assert ClaimSequence.model_validate("const").kind.c == 1.0
    custom = ClaimSequence.model_validate("custom:tests.payoffs:basket:2")
    assert custom.assets_touched == 2
    assert custom.kind.payoff is payoffs.basket
    with pytest.raises(ValueError):
        parse_claim("digital:1")


def test_flat_json_claim():
    claim = ClaimSequence.model_validate({"kind": "call", "asset": 1, "strike": 100})
    assert claim.kind.strike == 100.0
    assert claim.moment_bound_holds and claim.has_continuous_law


def test_claim_evaluation():
    prices = np.array([[90.0], [110.0]])
    assert ClaimSequence.call(100.0).evaluate(prices).tolist() == [0.0, 10.0]
    assert ClaimSequence.put(100.0).evaluate(prices).tolist() == [10.0, 0.0]
    assert ClaimSequence.constant(2.0).evaluate(prices).tolist() == [2.0, 2.0]
    with pytest.raises(ValueError):
        ClaimSequence.custom(payoffs.negative).evaluate(prices)


def test_sample_terminal_density(call_spec):
    draw = sample_terminal(call_spec, 1, seed=3)
    s_sq = theta_norm_sq(call_spec, 1)
    assert draw.measure is Measure.P
    assert draw.density.z_value == pytest.approx(math.exp(-draw.density.theta_dot_w - 0.5 * s_sq))
    assert draw.brownian_q[0] == pytest.approx(draw.brownian[0] + 0.5)
    expected_price = math.exp(-0.5 * 0.04 + 0.2 * draw.brownian_q[0])
    assert draw.prices[0] == pytest.approx(expected_price)


def test_sample_terminal_under_q(call_spec):
    draw = sample_terminal(call_spec, 1, seed=3, measure=Measure.Q)
    assert draw.brownian[0] == pytest.approx(draw.brownian_q[0] - 0.5)


def test_draws_do_not_depend_on_chunking(call_spec):
    claim = ClaimSequence.call(1.0)
    whole = simulate_draws(call_spec, 1, claim, 11, 0, 20_000)
    left = simulate_draws(call_spec, 1, claim, 11, 0, 7_001)
    right = simulate_draws(call_spec, 1, claim, 11, 7_001, 20_000)
    assert np.array_equal(whole.z, np.concatenate([left.z, right.z]))
    assert np.array_equal(whole.prices, np.concatenate([left.prices, right.prices]))


def test_density_has_unit_mean(unit_claim):
    spec = MarketSpec.from_theta_scale(1.0)
    n_draws = 200_000
    z = simulate_draws(spec, 1, unit_claim, 5, 0, n_draws).z
    stderr = math.sqrt((math.e - 1.0) / n_draws)
    assert abs(z.mean() - 1.0) <= 4.0 * stderr


def test_claim_needs_enough_assets(call_spec):
    with pytest.raises(ConfigError):
        simulate_draws(call_spec, 1, ClaimSequence.call(1.0, asset=2), 1, 0, 10)


def test_option_needs_volatilities(constant_tail_spec):
    with pytest.raises(ConfigError):
        simulate_draws(constant_tail_spec, 3, ClaimSequence.call(1.0), 1, 0, 10)


@pytest.mark.parametrize(
    "spec",
    [
        MarketSpec(tail="power:1"),
        MarketSpec(tail="constant:1"),
        MarketSpec(tail="geometric:0.5"),
        MarketSpec(ratios=(0.5, 0.0, 2.0), tail="power:0.5"),
    ],
)
def test_theta_norm_is_nondecreasing(spec):
    values = [theta_norm_sq(spec, n) for n in range(1, 60)]
    assert all(right >= left for left, right in zip(values, values[1:]))


def test_power_decay_partial_sum():
    assert theta_norm_sq(MarketSpec(tail="power:1"), 3) == pytest.approx(49.0 / 36.0, abs=1e-15)


def test_long_power_decay_sums_use_hurwitz_zeta():
    spec = MarketSpec(tail="power:1")
    # sum_{i > n} i^-2 = 1/n - 1/(2 n^2) + O(n^-3)
    n = 100_000_000
    assert theta_norm_sq(spec, n) == pytest.approx(math.pi**2 / 6 - 1.0 / n + 0.5 / n**2, abs=1e-14)
    # the switch between direct and zeta summation adds exactly one term
    edge = 1 << 20
    step = theta_norm_sq(spec, edge + 1) - theta_norm_sq(spec, edge)
    assert step == pytest.approx((edge + 1) ** -2.0, rel=1e-2)


def test_slowly_diverging_sum_is_blockwise():
    # sum_{i <= n} i^-1/2 = 2 sqrt(n) + zeta(1/2) + 1/(2 sqrt(n)) + O(n^-3/2)
    n = 3_000_000
    expected = 2.0 * math.sqrt(n) - 1.4603545088095868 + 0.5 / math.sqrt(n)
    assert theta_norm_sq(MarketSpec(tail="power:0.25"), n) == pytest.approx(expected, rel=1e-12)


def test_sample_terminal_is_reproducible():
    spec = MarketSpec(ratios=(0.5, 0.3), vols=(0.2,), spots=(100.0,))
    for measure in Measure:
        first = sample_terminal(spec, 5, seed=21, measure=measure)
        again = sample_terminal(spec, 5, seed=21, measure=measure)
        assert first == again
        assert first.prices == again.prices


@pytest.mark.parametrize("measure", [Measure.P, Measure.Q])
def test_density_survives_large_markets(constant_tail_spec, measure):
    draw = sample_terminal(constant_tail_spec, 2000, seed=1, measure=measure)
    density = draw.density
    assert density.log_z == pytest.approx(-density.theta_dot_w - 1000.0)
    assert 0.0 < density.z_value < math.inf
    if measure is Measure.P:
        assert density.log_z < -500.0
    else:
        assert density.log_z > 500.0


def test_density_without_drift_is_exactly_one():
    draw = sample_terminal(MarketSpec.from_theta_scale(0.0), 1, seed=4)
    assert draw.density.log_z == 0.0
    assert draw.density.z_value == 1.0


def test_q_brownian_is_centred_under_q():
    horizon, sigma = 2.0, 0.2
    spec = MarketSpec(ratios=(1.0,), vols=(sigma,), T=horizon)
    n_draws = 200_000
    claim = ClaimSequence.call(1.0)

    def w_star(measure: Measure) -> np.ndarray:
        # S_T = exp(-sigma^2 T / 2 + sigma W*_T) with S_0 = 1
        prices = simulate_draws(spec, 1, claim, 8, 0, n_draws, measure=measure).prices[:, 0]
        return (np.log(prices) + 0.5 * sigma * sigma * horizon) / sigma

    under_q = w_star(Measure.Q)
    assert abs(under_q.mean()) <= 4.0 * math.sqrt(horizon / n_draws)
    assert under_q.var() == pytest.approx(horizon, abs=4.0 * horizon * math.sqrt(2.0 / n_draws))
    # under P the same coordinate carries the drift theta T
    under_p = w_star(Measure.P)
    assert abs(under_p.mean() - horizon) <= 4.0 * math.sqrt(horizon / n_draws)


def test_driftless_price_is_a_martingale():
    spec = MarketSpec(ratios=(0.0,), vols=(0.2,), spots=(100.0,))
    n_draws = 1_000_000
    prices = simulate_draws(spec, 1, ClaimSequence.call(100.0), 13, 0, n_draws).prices[:, 0]
    stderr = prices.std() / math.sqrt(n_draws)
    assert abs(prices.mean() - 100.0) <= 4.0 * stderr
