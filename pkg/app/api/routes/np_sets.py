from fastapi import APIRouter

from app.api.deps import to_http_error
from app.core.exceptions import PricingLabError
from app.schemas.api import DiscreteNPRequest, GaussianNPRequest
from app.schemas.np import Atom, DiscreteMeasurePair, parse_mass
from app.services import gaussian_analytics, np_solver
from app.services.reporting import plain

router = APIRouter(prefix="/np", tags=["neyman-pearson"])

_GAUSSIAN = {
    "naa1": (gaussian_analytics.np_set_naa1, gaussian_analytics.np_power_naa1),
    "naa2": (gaussian_analytics.np_set_naa2, gaussian_analytics.np_power_naa2),
    "min-q": (gaussian_analytics.np_set_min_q, gaussian_analytics.np_power_min_q),
}


@router.post("/gaussian")
def gaussian_set(body: GaussianNPRequest):
    build, power = _GAUSSIAN[body.kind]
    try:
        np_set = build(body.theta_scale, body.eps)
        value = power(body.theta_scale, body.eps)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    payload = plain(np_set.model_dump(mode="python"))
    payload.update(p_mass=np_set.p_mass, q_mass=np_set.q_mass, power=value)
    return payload


@router.post("/discrete")
def discrete_set(body: DiscreteNPRequest):
    """
    Optimal non-randomized set on a finite space. Masses given as "a/b" are
    handled exactly and come back as strings.
    """
    try:
        pair = DiscreteMeasurePair(tuple(Atom(a.label, parse_mass(a.p), parse_mass(a.q)) for a in body.atoms))
        budget = parse_mass(body.budget)
        solution = np_solver.solve_np_min(pair, budget) if body.minimize else np_solver.solve_np(pair, budget)
    except (PricingLabError, ValueError) as exc:
        raise to_http_error(exc)
    return {
        "chosen_atoms": list(solution.chosen_atoms),
        "objective_mass": str(solution.objective_mass),
        "constraint_mass": str(solution.constraint_mass),
        "lr_threshold": None if solution.lr_threshold is None else str(solution.lr_threshold),
        "method": solution.method,
        "greedy_objective": None if solution.greedy_objective is None else str(solution.greedy_objective),
        "is_level_set": solution.is_level_set(pair),
    }
