import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class Regime(str, enum.Enum):
    NO_ASYMPTOTIC_ARBITRAGE = "NoAsymptoticArbitrage"
    STRONG_ASYMPTOTIC_ARBITRAGE = "StrongAsymptoticArbitrage"


class ArbitrageFlags(BaseModel):
    """
    The four-condition vocabulary. In the constant-coefficient Gaussian market
    either all four "no" conditions hold or all four fail together.
    """

    model_config = ConfigDict(frozen=True)

    NAA1: bool
    NAA2: bool
    NSAA1: bool
    NSAA2: bool

    @property
    def labels(self) -> list[str]:
        return [name if value else name[1:] for name, value in self.model_dump().items()]


class WitnessPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    theta_scale: float = Field(ge=0.0)
    eps_n: float = Field(ge=0.0, le=1.0)
    p_power: float = Field(ge=0.0, le=1.0)


class PowerPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float = Field(gt=0.0, lt=1.0)
    p_power: float = Field(ge=0.0, le=1.0)
    q_power: float = Field(ge=0.0, le=1.0)


class SAABoundPoint(BaseModel):
    """exp(s^2/(2+delta)) Phi(ln s - s) at s = ||theta^n|| sqrt(T)."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    theta_scale: float = Field(ge=0.0)
    bound: float = Field(ge=0.0)


class ArbitrageVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    regime: Regime
    series_value: float = Field(ge=0.0)  # inf when the series diverges
    series_converges: bool
    flags: ArbitrageFlags
    witness: Optional[list[WitnessPoint]] = None
    witness_rule: Optional[str] = None

    @property
    def is_arbitrage_free(self) -> bool:
        return self.regime is Regime.NO_ASYMPTOTIC_ARBITRAGE
