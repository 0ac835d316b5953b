import enum
import importlib
import math
from typing import Annotated, Any, Callable, Literal, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    field_validator,
    model_validator,
)


# exp() of these stays a positive finite float
_LOG_TINY = math.log(float(np.finfo(float).tiny))
_LOG_HUGE = math.log(float(np.finfo(float).max)) - 1.0


class Measure(str, enum.Enum):
    P = "P"  # physical measure P^n
    Q = "Q"  # martingale measure Q^n


# ---------------- Tail rules for b_i / sigma_i beyond the explicit head ----------------


class ConstantTail(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["constant"] = "constant"
    c: float

    def ratio(self, i: int) -> float:
        return self.c


class PowerDecayTail(BaseModel):
    """b_i/sigma_i = i^(-p)."""

    model_config = ConfigDict(frozen=True)
    kind: Literal["power"] = "power"
    p: float

    def ratio(self, i: int) -> float:
        return float(i) ** (-self.p)


class GeometricTail(BaseModel):
    """b_i/sigma_i = r^i with |r| < 1."""

    model_config = ConfigDict(frozen=True)
    kind: Literal["geometric"] = "geometric"
    r: float = Field(gt=-1.0, lt=1.0)

    def ratio(self, i: int) -> float:
        return self.r**i


class ZeroTail(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["zero"] = "zero"

    def ratio(self, i: int) -> float:
        return 0.0


TailRule = Annotated[
    Union[ConstantTail, PowerDecayTail, GeometricTail, ZeroTail],
    Field(discriminator="kind"),
]

_TAIL_PARAM = {"constant": "c", "const": "c", "power": "p", "geometric": "r"}


def parse_tail(text: str) -> dict[str, Any]:
    """
    Shorthand used by the CLI and JSON documents: "zero", "constant:1",
    "power:0.5", "geometric:0.9".
    """
    head, _, arg = text.strip().partition(":")
    head = head.lower()
    if head == "zero":
        return {"kind": "zero"}
    if head not in _TAIL_PARAM or not arg:
        raise ValueError(f"unknown tail rule {text!r}")
    kind = "constant" if head == "const" else head
    return {"kind": kind, _TAIL_PARAM[head]: float(arg)}


# ---------------- Market specification ----------------


class MarketSpec(BaseModel):
    """
    Constant-coefficient large Black-Scholes market. All prices are discounted;
    there is no interest rate.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    explicit_ratios: tuple[float, ...] = Field(default=(), alias="ratios")
    tail_rule: TailRule = Field(default_factory=ZeroTail, alias="tail")
    horizon_T: PositiveFloat = Field(default=1.0, alias="T")
    spot_prices: tuple[PositiveFloat, ...] = Field(default=(), alias="spots")
    vols: tuple[PositiveFloat, ...] = ()

    @field_validator("tail_rule", mode="before")
    @classmethod
    def _tail_shorthand(cls, value: Any) -> Any:
        if isinstance(value, str):
            return parse_tail(value)
        return value

    @classmethod
    def from_theta_scale(cls, theta_scale: float, horizon_T: float = 1.0) -> "MarketSpec":
        """One-asset market whose ||theta^1|| sqrt(T) equals theta_scale."""
        if theta_scale < 0:
            raise ValueError("theta_scale must be nonnegative")
        return cls(
            explicit_ratios=(theta_scale / np.sqrt(horizon_T),),
            tail_rule=ZeroTail(),
            horizon_T=horizon_T,
        )

    @property
    def head_size(self) -> int:
        return len(self.explicit_ratios)

    def ratio(self, i: int) -> float:
        """b_i / sigma_i, 1-based."""
        if i < 1:
            raise ValueError("asset index is 1-based")
        if i <= self.head_size:
            return self.explicit_ratios[i - 1]
        return self.tail_rule.ratio(i)

    def ratios(self, n: int) -> np.ndarray:
        return np.array([self.ratio(i) for i in range(1, n + 1)], dtype=float)

    def vol(self, i: int) -> float:
        # sigma tail repeats the last explicit value
        if not self.vols:
            raise ValueError("market spec declares no volatilities")
        return self.vols[min(i, len(self.vols)) - 1]

    def spot(self, i: int) -> float:
        if i <= len(self.spot_prices):
            return self.spot_prices[i - 1]
        return 1.0

    def drift(self, i: int) -> float:
        return self.ratio(i) * self.vol(i)


# ---------------- Claims ----------------


class ConstantClaim(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["const"] = "const"
    c: float = Field(ge=0.0)


class CallClaim(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["call"] = "call"
    asset: int = Field(default=1, ge=1)
    strike: PositiveFloat


class PutClaim(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["put"] = "put"
    asset: int = Field(default=1, ge=1)
    strike: PositiveFloat


def _import_payoff(path: str) -> Callable[[np.ndarray], np.ndarray]:
    module_name, _, attr = path.partition(":")
    if not module_name or not attr:
        raise ValueError(f"custom payoff must be 'package.module:function', got {path!r}")
    return getattr(importlib.import_module(module_name), attr)


class CustomClaim(BaseModel):
    """
    Terminal payoff of the first `assets` prices. `payoff` maps an (N, assets)
    array to N nonnegative values.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    kind: Literal["custom"] = "custom"
    assets: int = Field(default=1, ge=1)
    payoff: Callable[[np.ndarray], np.ndarray] = Field(exclude=True)
    continuous: bool = True
    moment_bounded: bool = False

    @field_validator("payoff", mode="before")
    @classmethod
    def _resolve_payoff(cls, value: Any) -> Any:
        if isinstance(value, str):
            return _import_payoff(value)
        return value


ClaimKind = Annotated[
    Union[ConstantClaim, CallClaim, PutClaim, CustomClaim],
    Field(discriminator="kind"),
]


class ClaimSequence(BaseModel):
    """
    Stationary sequence of claims: H_n is the same payoff on every market n.
    """

    model_config = ConfigDict(frozen=True)

    kind: ClaimKind
    stationary: Literal[True] = True

    @model_validator(mode="before")
    @classmethod
    def _flat_form(cls, data: Any) -> Any:
        if isinstance(data, str):
            return {"kind": parse_claim(data)}
        if isinstance(data, dict) and "kind" in data and isinstance(data["kind"], str):
            # flat JSON form {"kind": "call", "asset": 1, "strike": 100}
            return {"kind": data}
        return data

    @classmethod
    def constant(cls, c: float) -> "ClaimSequence":
        return cls(kind=ConstantClaim(c=c))

    @classmethod
    def call(cls, strike: float, asset: int = 1) -> "ClaimSequence":
        return cls(kind=CallClaim(asset=asset, strike=strike))

    @classmethod
    def put(cls, strike: float, asset: int = 1) -> "ClaimSequence":
        return cls(kind=PutClaim(asset=asset, strike=strike))

    @classmethod
    def custom(cls, payoff: Callable[[np.ndarray], np.ndarray], assets: int = 1, **flags: bool) -> "ClaimSequence":
        return cls(kind=CustomClaim(payoff=payoff, assets=assets, **flags))

    @property
    def assets_touched(self) -> int:
        """Number of leading assets whose terminal price the payoff reads."""
        kind = self.kind
        if isinstance(kind, ConstantClaim):
            return 0
        if isinstance(kind, CustomClaim):
            return kind.assets
        return kind.asset

    @property
    def moment_bound_holds(self) -> bool:
        # bounded or lognormal payoffs have every moment
        if isinstance(self.kind, CustomClaim):
            return self.kind.moment_bounded
        return True

    @property
    def has_continuous_law(self) -> bool:
        """Whether H_n Z_n is continuous on (0, inf) under P^n."""
        if isinstance(self.kind, CustomClaim):
            return self.kind.continuous
        return True

    def evaluate(self, prices: np.ndarray) -> np.ndarray:
        """
        Payoff on an (N, m) array of terminal prices with m >= assets_touched.
        """
        kind = self.kind
        n_rows = prices.shape[0]
        if isinstance(kind, ConstantClaim):
            return np.full(n_rows, kind.c, dtype=float)
        if isinstance(kind, CallClaim):
            return np.maximum(prices[:, kind.asset - 1] - kind.strike, 0.0)
        if isinstance(kind, PutClaim):
            return np.maximum(kind.strike - prices[:, kind.asset - 1], 0.0)
        values = np.asarray(kind.payoff(prices[:, : kind.assets]), dtype=float)
        if values.shape != (n_rows,):
            raise ValueError(f"custom payoff returned shape {values.shape}, expected ({n_rows},)")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("custom payoff must be finite and nonnegative")
        return values


_CLAIM_FIELDS = {"call": ("asset", "strike"), "put": ("asset", "strike")}


def parse_claim(text: str) -> dict[str, Any]:
    """
    CLI descriptor: "const:1", "call:1:100" (asset:strike), "put:1:100",
    "call:100" (asset 1), "custom:pkg.mod:fn:2" (import path, asset count).
    """
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    if head in ("const", "constant"):
        return {"kind": "const", "c": float(rest or 1.0)}
    if head in _CLAIM_FIELDS:
        parts = [p for p in rest.split(":") if p]
        if len(parts) == 1:
            return {"kind": head, "asset": 1, "strike": float(parts[0])}
        if len(parts) == 2:
            return {"kind": head, "asset": int(parts[0]), "strike": float(parts[1])}
    if head == "custom":
        module, _, tail = rest.partition(":")
        function, _, assets = tail.partition(":")
        return {"kind": "custom", "payoff": f"{module}:{function}", "assets": int(assets or 1)}
    raise ValueError(f"unknown claim descriptor {text!r}")


class DensityEvaluation(BaseModel):
    """
    Z_n = dQ^n/dP^n at one drawn point. `log_z` is exact; `z_value` is exp(log_z)
    saturated to the positive finite floats, which it leaves at large n.
    """

    model_config = ConfigDict(frozen=True)

    theta_dot_w: float  # (theta^n, W_T^n)
    log_z: float
    z_value: PositiveFloat

    @classmethod
    def from_log(cls, theta_dot_w: float, log_z: float) -> "DensityEvaluation":
        clamped = min(max(log_z, _LOG_TINY), _LOG_HUGE)
        return cls(theta_dot_w=theta_dot_w, log_z=log_z, z_value=math.exp(clamped))


class TerminalSample(BaseModel):
    """One draw of the n-th market at the horizon."""

    model_config = ConfigDict(frozen=True)

    measure: Measure
    brownian: tuple[float, ...]  # W_T^n
    brownian_q: tuple[float, ...]  # W*_T^n = W_T^n + theta^n T
    density: DensityEvaluation
    prices: tuple[float, ...]  # S_T^i for assets with a declared volatility
