import enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from app.schemas.market import Measure


class TailDirection(str, enum.Enum):
    UPPER = "UpperTail"
    LOWER = "LowerTail"


class Coordinate(str, enum.Enum):
    THETA_W = "theta_w"  # (theta^n, W_T^n), N(0, s^2) under P
    THETA_W_STAR = "theta_w_star"  # (theta^n, W*_T^n), N(0, s^2) under Q


class GaussianNPSet(BaseModel):
    """
    Half-space optimal test set {coordinate >= c} or {coordinate <= c} of the
    Black-Scholes market, with s = ||theta^n|| sqrt(T).
    """

    model_config = ConfigDict(frozen=True)

    direction: TailDirection
    coordinate: Coordinate
    threshold_c: float
    gamma: float = Field(ge=0.0)
    log_gamma: float
    budget_eps: float = Field(ge=0.0, le=1.0)
    theta_scale: float = Field(ge=0.0)
    constrained: Measure
    constrained_mass: float = Field(ge=0.0, le=1.0)

    def _mean_of_coordinate(self, measure: Measure) -> float:
        s2 = self.theta_scale**2
        if self.coordinate is Coordinate.THETA_W:
            return 0.0 if measure is Measure.P else -s2
        return s2 if measure is Measure.P else 0.0

    def mass(self, measure: Measure) -> float:
        s = self.theta_scale
        if s == 0.0:
            # P = Q; the set is any event of the constrained mass
            return self.constrained_mass
        z = (self.threshold_c - self._mean_of_coordinate(measure)) / s
        if self.direction is TailDirection.UPPER:
            return float(special.ndtr(-z))
        return float(special.ndtr(z))

    @property
    def p_mass(self) -> float:
        return self.mass(Measure.P)

    @property
    def q_mass(self) -> float:
        return self.mass(Measure.Q)

    def contains(self, theta_dot_w: np.ndarray, aux: np.ndarray | None = None) -> np.ndarray:
        """
        Membership of sampled points given (theta^n, W_T^n). With theta_scale 0 the
        projected coordinate is identically zero and the set is cut from an
        auxiliary standard normal `aux` instead.
        """
        if self.theta_scale == 0.0:
            if aux is None:
                raise ValueError("theta_scale is 0: pass an auxiliary standard normal coordinate")
            cut = special.ndtri(1.0 - self.constrained_mass) if self.constrained_mass < 1.0 else -math.inf
            return np.asarray(aux) >= cut
        value = np.asarray(theta_dot_w, dtype=float)
        if self.coordinate is Coordinate.THETA_W_STAR:
            value = value + self.theta_scale**2
        if self.direction is TailDirection.UPPER:
            return value >= self.threshold_c
        return value <= self.threshold_c


class HoelderExponents(BaseModel):
    """
    Exponents p, p' > 1 with (p'-1)/(2(p-1)) = 1/(2+delta) that make the claim
    moment needed by the weak-price-zero argument as small as possible.
    """

    model_config = ConfigDict(frozen=True)

    delta: float
    p: float
    p_prime: float
    pq_prime: float  # published closed form

    @property
    def q_prime(self) -> float:
        return self.p_prime / (self.p_prime - 1.0)

    @property
    def moment_exponent(self) -> float:
        """p * q' computed from p and p' directly."""
        return self.p * self.q_prime

    @property
    def constraint_residual(self) -> float:
        return abs(0.5 * (self.p_prime - 1.0) / (self.p - 1.0) - 1.0 / (2.0 + self.delta))
