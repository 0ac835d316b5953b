import math

import numpy as np
import pytest

from app.core.exceptions import ConfigError
from app.schemas.market import ClaimSequence, MarketSpec, Measure
from app.services.gaussian_analytics import (
    norm_cdf,
    norm_quantile,
    np_power_min_q,
    np_power_naa1,
    np_power_naa2,
    np_set_min_q,
    np_set_naa1,
    np_set_naa2,
    optimal_hoelder_exponents,
    saa_limit_fn,
    z_moment,
)
from app.services.model import simulate_draws

N_DRAWS = 1_000_000
EPS_LEVELS = (0.01, 0.05, 0.2)


def _binomial_tol(p: float, n: int = N_DRAWS) -> float:
    return 4.0 * math.sqrt(p * (1.0 - p) / n) + 1e-12


def test_norm_quantile_domain():
    assert norm_quantile(0.5) == 0.0
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigError):
            norm_quantile(bad)
    with pytest.raises(ConfigError):
        norm_quantile(np.array([0.2, 1.0]))


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_zero_theta_scale_gives_no_power(eps):
    assert np_power_naa1(0.0, eps) == pytest.approx(eps, abs=1e-14)
    assert np_power_naa2(0.0, eps) == pytest.approx(eps, abs=1e-14)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("eps", [0.01, 0.1])
def test_set_masses_match_closed_forms(s, eps):
    first = np_set_naa1(s, eps)
    assert first.q_mass == pytest.approx(eps, rel=1e-9)
    assert first.p_mass == pytest.approx(np_power_naa1(s, eps), rel=1e-9)

    second = np_set_naa2(s, eps)
    assert second.p_mass == pytest.approx(eps, rel=1e-9)
    assert second.q_mass == pytest.approx(np_power_naa2(s, eps), rel=1e-9)

    least = np_set_min_q(s, eps)
    assert least.p_mass == pytest.approx(1.0 - eps, rel=1e-9)
    assert least.q_mass == pytest.approx(np_power_min_q(s, eps), rel=1e-9)
    assert np_power_min_q(s, eps) == pytest.approx(1.0 - np_power_naa2(s, eps), abs=1e-12)


def test_set_is_a_density_level_set():
    s, eps = 1.3, 0.05
    second = np_set_naa2(s, eps)
    # {Z >= gamma} with Z = exp(-(theta, W) - s^2/2)
    assert -second.log_gamma - 0.5 * s * s == pytest.approx(second.threshold_c)
    assert second.gamma == pytest.approx(math.exp(second.log_gamma))


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_sampled_masses_agree_with_closed_forms(s):
    spec = MarketSpec.from_theta_scale(s)
    claim = ClaimSequence.constant(1.0)
    under_p = simulate_draws(spec, 1, claim, 2024, 0, N_DRAWS, Measure.P).theta_dot_w
    under_q = simulate_draws(spec, 1, claim, 2025, 0, N_DRAWS, Measure.Q).theta_dot_w
    for eps in EPS_LEVELS:
        first = np_set_naa1(s, eps)
        power = np_power_naa1(s, eps)
        assert abs(first.contains(under_p).mean() - power) <= _binomial_tol(power)
        assert abs(first.contains(under_q).mean() - eps) <= _binomial_tol(eps)

        second = np_set_naa2(s, eps)
        power = np_power_naa2(s, eps)
        assert abs(second.contains(under_p).mean() - eps) <= _binomial_tol(eps)
        assert abs(second.contains(under_q).mean() - power) <= _binomial_tol(power)


def test_zero_scale_set_needs_auxiliary_coordinate():
    np_set = np_set_naa1(0.0, 0.2)
    with pytest.raises(ValueError):
        np_set.contains(np.zeros(3))
    aux = np.array([-1.0, 0.5, 2.0])
    assert np_set.contains(np.zeros(3), aux).tolist() == [False, False, True]


def test_bad_budget_is_rejected():
    with pytest.raises(ConfigError):
        np_set_naa1(1.0, 0.0)
    with pytest.raises(ConfigError):
        np_power_naa2(-1.0, 0.1)


def test_density_moments():
    assert z_moment(1.5, 1.0) == 1.0
    assert z_moment(1.5, 2.0) == pytest.approx(math.exp(1.5**2))
    with pytest.raises(ConfigError):
        z_moment(1.0, 0.0)


@pytest.mark.parametrize("delta", [1e-6, 0.01, 0.1, 0.5, 1.0, 4.0, 10.0])
def test_hoelder_exponents_satisfy_constraint(delta):
    exps = optimal_hoelder_exponents(delta)
    assert exps.p > 1.0 and exps.p_prime > 1.0
    assert exps.constraint_residual < 1e-12


def test_hoelder_exponents_small_delta_limit():
    exps = optimal_hoelder_exponents(1e-6)
    assert exps.pq_prime == pytest.approx(math.sqrt(2.0) / 2.0 + 3.0, abs=1e-6)
    assert exps.moment_exponent == pytest.approx(4.0, abs=1e-5)
    with pytest.raises(ConfigError):
        optimal_hoelder_exponents(0.0)


@pytest.mark.parametrize("delta", [1.0, 2.0, 4.0])
def test_saa_limit_function_vanishes(delta):
    grid = np.arange(25.0, 50.5, 0.5)
    values = saa_limit_fn(grid, delta)
    assert isinstance(values, np.ndarray)
    assert np.all(values < 1e-10)
    assert saa_limit_fn(50.0, delta) < 1e-90


def test_saa_limit_function_decreases():
    grid = np.arange(10.0, 50.5, 0.5)
    values = saa_limit_fn(grid, 1.0)
    assert np.all(np.diff(values) < 0)


def test_saa_limit_function_domain():
    with pytest.raises(ConfigError):
        saa_limit_fn(0.0, 1.0)
    with pytest.raises(ConfigError):
        saa_limit_fn(1.0, 0.0)
    assert saa_limit_fn(2.0, 1.0) == pytest.approx(math.exp(4.0 / 3.0) * norm_cdf(math.log(2.0) - 2.0))


# ---------------- optimality against half-space competitors ----------------
# In the plane of (theta, W)/s and an orthogonal unit coordinate, a half-space
# {a X + b Y >= c} with a^2 + b^2 = 1 has P- and Q-mass in closed form.

THETA_SCALES = (0.0, 0.3, 1.0, 2.5)


def _directions(rng: np.random.Generator, size: int = 2000) -> np.ndarray:
    return np.cos(rng.uniform(0.0, 2.0 * math.pi, size))


@pytest.mark.parametrize("s", THETA_SCALES)
@pytest.mark.parametrize("eps", EPS_LEVELS)
def test_naa1_set_beats_half_spaces(s, eps):
    rng = np.random.default_rng(11)
    a = _directions(rng)
    # X ~ N(0, 1) under Q and N(s, 1) under P; Q(A) = Phi(-c) <= eps
    c = -norm_quantile(eps) + rng.exponential(0.5, a.size)
    assert np.all(norm_cdf(-c) <= eps + 1e-15)
    assert np.all(norm_cdf(a * s - c) <= np_power_naa1(s, eps) + 1e-15)


@pytest.mark.parametrize("s", THETA_SCALES)
@pytest.mark.parametrize("eps", EPS_LEVELS)
def test_naa2_set_beats_half_spaces(s, eps):
    rng = np.random.default_rng(12)
    a = _directions(rng)
    # X ~ N(0, 1) under P and N(-s, 1) under Q; A = {a X + b Y <= c}, P(A) = Phi(c) <= eps
    c = norm_quantile(eps) - rng.exponential(0.5, a.size)
    assert np.all(norm_cdf(c) <= eps + 1e-15)
    assert np.all(norm_cdf(c + a * s) <= np_power_naa2(s, eps) + 1e-15)


@pytest.mark.parametrize("s", THETA_SCALES)
@pytest.mark.parametrize("eps", EPS_LEVELS)
def test_min_q_set_beats_half_spaces(s, eps):
    rng = np.random.default_rng(13)
    a = _directions(rng)
    # A = {a X + b Y >= c}, P(A) = Phi(-c) >= 1 - eps
    c = norm_quantile(eps) - rng.exponential(0.5, a.size)
    assert np.all(norm_cdf(-c) >= 1.0 - eps - 1e-15)
    assert np.all(norm_cdf(-a * s - c) >= np_power_min_q(s, eps) - 1e-15)


def test_naa1_power_is_increasing():
    thetas = np.linspace(0.0, 4.0, 41)
    powers = [np_power_naa1(s, 0.05) for s in thetas]
    assert all(lo < hi for lo, hi in zip(powers, powers[1:]))
    levels = np.linspace(0.01, 0.99, 50)
    powers = [np_power_naa1(1.0, eps) for eps in levels]
    assert all(lo < hi for lo, hi in zip(powers, powers[1:]))
    assert np_power_naa1(0.0, 0.05) == pytest.approx(0.05)
