from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

from app.schemas.market import ClaimSequence, CustomClaim, MarketSpec


class MCQuery(BaseModel):
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    samples: Optional[int] = Field(default=None, ge=100)
    two_pass: bool = False


class ClassifyRequest(BaseModel):
    spec: MarketSpec
    n_grid: Optional[list[int]] = None


class PowerCurveRequest(BaseModel):
    spec: MarketSpec
    n: int = Field(default=1, ge=1)
    eps_grid: list[float] = Field(min_length=1)


class _ClaimRequest(BaseModel):
    spec: MarketSpec
    # descriptor "call:1:100" or the flat JSON form
    claim: Union[str, dict[str, Any]] = "const:1"
    mc: MCQuery = Field(default_factory=MCQuery)

    @field_validator("claim")
    @classmethod
    def _known_claim(cls, value: Union[str, dict[str, Any]]) -> Union[str, dict[str, Any]]:
        kind = value.partition(":")[0] if isinstance(value, str) else value.get("kind")
        if isinstance(kind, dict):
            kind = kind.get("kind")
        # checked before validation so no module gets imported
        if str(kind).lower() == CustomClaim.model_fields["kind"].default:
            raise ValueError("custom payoffs are only available from Python and the CLI")
        ClaimSequence.model_validate(value)
        return value

    def claim_sequence(self) -> ClaimSequence:
        return ClaimSequence.model_validate(self.claim)


class PriceRequest(_ClaimRequest):
    n: int = Field(default=1, ge=1)
    alpha: float = Field(ge=0.0, le=1.0)
    method: Literal["auto", "closed_form", "monte_carlo"] = "auto"


class CurveRequest(_ClaimRequest):
    n: int = Field(default=1, ge=1)
    alpha_grid: list[float] = Field(min_length=1)
    method: Literal["auto", "closed_form", "monte_carlo"] = "auto"
    delta: Optional[float] = Field(default=None, gt=0.0)


class TrajectoryRequest(_ClaimRequest):
    n_grid: list[int] = Field(min_length=1)
    delta: Optional[float] = Field(default=None, gt=0.0)


class GaussianNPRequest(BaseModel):
    theta_scale: float = Field(ge=0.0)
    eps: float = Field(gt=0.0, lt=1.0)
    kind: Literal["naa1", "naa2", "min-q"] = "naa1"


class AtomIn(BaseModel):
    label: str
    # "3/8" keeps the mass exact
    p: str
    q: str


class DiscreteNPRequest(BaseModel):
    atoms: list[AtomIn] = Field(min_length=1)
    budget: str
    minimize: bool = False
