from fastapi import APIRouter

from app.api.deps import mc_params_from, to_http_error
from app.core.exceptions import PricingLabError
from app.schemas.api import CurveRequest, PriceRequest, TrajectoryRequest
from app.services import pricing
from app.services.reporting import plain

router = APIRouter(prefix="/pricing", tags=["pricing"])


@router.post("/price")
def quantile_price(body: PriceRequest):
    """
    alpha-quantile price plus the strong price of the same claim at n.
    Monte Carlo paths need mc.seed.
    """
    params = mc_params_from(body.mc)
    try:
        claim = body.claim_sequence()
        result = pricing.quantile_price(body.spec, claim, body.n, body.alpha, params, body.method)
        strong = pricing.strong_price(body.spec, claim, body.n, params)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    return {
        "quantile_price": plain(result.model_dump(mode="python")),
        "strong_price": plain(strong.model_dump(mode="python")),
    }


@router.post("/curve")
def price_curve(body: CurveRequest):
    params = mc_params_from(body.mc)
    try:
        curve = pricing.price_curve(
            body.spec, body.claim_sequence(), body.n, body.alpha_grid, params, body.method, body.delta
        )
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    payload = plain(curve.model_dump(mode="python"))
    payload["monotone"] = curve.is_monotone()
    return payload


@router.post("/trajectory")
def weak_price_trajectory(body: TrajectoryRequest):
    params = mc_params_from(body.mc)
    try:
        trajectory = pricing.weak_price_trajectory(body.spec, body.claim_sequence(), body.n_grid, params, body.delta)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    return plain(trajectory.model_dump(mode="python"))
