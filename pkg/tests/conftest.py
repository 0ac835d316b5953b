import pytest

from app.schemas.market import ClaimSequence, MarketSpec
from app.schemas.mc import MCParams

SEED = 12345


@pytest.fixture
def mc_params() -> MCParams:
    return MCParams(n_samples=1_000_000, seed=SEED, chunk_size=65_536, max_workers=4)


@pytest.fixture
def small_mc_params() -> MCParams:
    return MCParams(n_samples=50_000, seed=SEED, chunk_size=8_192, max_workers=1)


@pytest.fixture
def constant_tail_spec() -> MarketSpec:
    """b_i / sigma_i = 1 for every i: the series diverges."""
    return MarketSpec(tail="constant:1")


@pytest.fixture
def power_decay_spec() -> MarketSpec:
    """b_i / sigma_i = 1/i: the series sums to pi^2/6."""
    return MarketSpec(tail="power:1")


@pytest.fixture
def call_spec() -> MarketSpec:
    return MarketSpec(ratios=(0.5,), vols=(0.2,), spots=(1.0,))


@pytest.fixture
def unit_claim() -> ClaimSequence:
    return ClaimSequence.constant(1.0)
