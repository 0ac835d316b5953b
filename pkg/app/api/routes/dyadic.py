from fastapi import APIRouter, Query

from app.api.deps import to_http_error
from app.core.exceptions import PricingLabError
from app.schemas.dyadic import DyadicMarket
from app.services import dyadic_market

router = APIRouter(prefix="/dyadic", tags=["dyadic"])


@router.get("/example")
def dyadic_example(
    delta: float = Query(gt=0.0, lt=1.0),
    alpha: float = Query(ge=0.0, le=1.0),
    n: int = Query(default=20, ge=1, le=200),
):
    """
    Table (n, P(A_n), Q(A_n), delta*alpha) with exact masses as "a/b" strings,
    plus the AA2 witness F_n at the last n.
    """
    try:
        rows = dyadic_market.example_table(delta, alpha, n)
        market = DyadicMarket(delta=delta, depth_n=n)
        price = dyadic_market.quantile_price_const1(market, alpha)
        witness = dyadic_market.aa2_witness(market, n)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    return {
        "rows": [
            {"n": r.n, "p_mass": str(r.p_mass), "q_mass": str(r.q_mass), "delta_alpha": str(r.delta_alpha)}
            for r in rows
        ],
        "value": str(price.value),
        "limit": str(price.limit),
        "value_float": float(price.value),
        "strong_price": str(dyadic_market.strong_price_const1(market)),
        "aa2_witness": {"p_mass": str(witness.p_mass), "q_mass": str(witness.q_mass)},
    }
