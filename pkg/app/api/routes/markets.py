from fastapi import APIRouter

from app.api.deps import to_http_error
from app.core.exceptions import PricingLabError
from app.schemas.api import ClassifyRequest, PowerCurveRequest
from app.services import arbitrage
from app.services.reporting import plain

router = APIRouter(prefix="/markets", tags=["markets"])


@router.post("/classify")
def classify_market(body: ClassifyRequest):
    """
    Regime of the market:
    - regime, series_value, the four flags
    - separation witness over n_grid when the series diverges
    """
    try:
        verdict = arbitrage.classify(body.spec, body.n_grid)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    payload = plain(verdict.model_dump(mode="python"))
    payload["flag_labels"] = verdict.flags.labels
    return payload


@router.post("/power-curve")
def power_curve(body: PowerCurveRequest):
    try:
        points = arbitrage.contiguity_power_curve(body.spec, body.n, body.eps_grid)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    return {"n": body.n, "points": [p.model_dump() for p in points]}
