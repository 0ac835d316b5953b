import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.arbitrage import Regime


class PriceMethod(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    MONTE_CARLO = "MonteCarlo"


class PriceEstimate(BaseModel):
    """Strong price E^{Q^n}[H_n] at a fixed n."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    value: float = Field(ge=0.0)
    stderr: float = Field(default=0.0, ge=0.0)
    method: PriceMethod
    n_samples: Optional[int] = None
    # stationary claims give the same value for every n
    n_independent: bool = True


class QuantilePriceResult(BaseModel):
    """
    E[H_n Z_n 1{H_n Z_n <= q_n(alpha)}] with q_n(alpha) the alpha-quantile of
    H_n Z_n under P^n.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0.0, le=1.0)
    n: int = Field(ge=1)
    value: float = Field(ge=0.0)
    quantile_q: float = Field(ge=0.0)
    stderr: float = Field(default=0.0, ge=0.0)
    method: PriceMethod
    atom_alpha0: float = Field(ge=0.0, le=1.0)
    atom_alpha0_exact: Optional[float] = None
    set_p_mass: float = Field(ge=0.0, le=1.0)
    # constant-alpha value reported when the moment hypothesis is not declared
    upper_bound_only: bool = False
    n_samples: Optional[int] = None


class PriceCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    points: list[QuantilePriceResult]
    lipschitz_K: Optional[float] = Field(default=None, ge=0.0)
    hoelder_exponent: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    def lipschitz_bound(self, alpha: float, beta: float) -> float:
        if self.lipschitz_K is None:
            return float("inf")
        return self.lipschitz_K * abs(alpha - beta)

    def hoelder_bound(self, alpha: float, beta: float) -> float:
        """K |alpha - beta|^(1/q), the bound the Hoelder step yields."""
        if self.lipschitz_K is None or self.hoelder_exponent is None:
            return float("inf")
        return self.lipschitz_K * abs(alpha - beta) ** self.hoelder_exponent

    @property
    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def is_monotone(self, slack_sigmas: float = 3.0) -> bool:
        for left, right in zip(self.points, self.points[1:]):
            if right.value < left.value - slack_sigmas * (left.stderr + right.stderr):
                return False
        return True


class TrajectoryPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    theta_scale: float = Field(ge=0.0)
    eps_n: float = Field(ge=0.0, le=1.0)
    alpha_n: float = Field(ge=0.0, le=1.0)
    value: float = Field(ge=0.0)
    stderr: float = Field(default=0.0, ge=0.0)
    strong_price: float = Field(ge=0.0)
    gap_bound: Optional[float] = None


class WeakPriceTrajectory(BaseModel):
    model_config = ConfigDict(frozen=True)

    regime: Regime
    schedule: str
    trend: str
    points: list[TrajectoryPoint]


class PriceEqualityCheck(BaseModel):
    """
    Whether the weak price along the trajectory agrees with the strong price,
    next to the hypotheses under which agreement is guaranteed.
    """

    model_config = ConfigDict(frozen=True)

    naa2: bool
    complete: bool = True
    bounded_claim: bool
    hypotheses_hold: bool
    weak_price: float
    strong_price: float
    tolerance: float
    prices_agree: bool


class SAAPriceBoundPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    eps_n: float
    p_power: float
    bound: float = Field(ge=0.0)
