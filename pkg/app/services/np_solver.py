"""
Neyman-Pearson optimal sets on finite probability spaces.

Non-randomized tests cannot always spend the whole budget, so the greedy
likelihood-ratio order can miss the optimum in knapsack-like cases. Up to
EXHAUSTIVE_LIMIT atoms an exhaustive subset scan decides the answer and the
greedy value is kept alongside for comparison.
"""

import logging
import math
from fractions import Fraction
from typing import Optional

import numpy as np

from app.core.exceptions import ConfigError
from app.schemas.np import MASS_TOLERANCE, DiscreteMeasurePair, Mass, NPSolution

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20
_MASK_BLOCK = 1 << 16


def _check_level(value: Mass, name: str) -> None:
    if not 0 <= value <= 1:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


def _fits(total: Mass, bound: Mass) -> bool:
    if isinstance(total, Fraction) and isinstance(bound, (Fraction, int)):
        return total <= bound
    return total <= bound + MASS_TOLERANCE


def _threshold(pair: DiscreteMeasurePair, chosen: tuple[str, ...]) -> Optional[float | Fraction]:
    ratios = [a.ratio for a in pair.atoms if a.label in set(chosen)]
    return min(ratios) if ratios else None


# ---------------- Greedy likelihood-ratio order ----------------


def greedy_np(pair: DiscreteMeasurePair, budget: Mass) -> NPSolution:
    """
    Walks atoms by decreasing dP/dQ (Q-null atoms first, ties by label) and
    keeps each one that still fits the Q budget.
    """
    _check_level(budget, "budget")
    ranked = sorted(
        (a for a in pair.atoms if a.p_mass > 0),
        key=lambda a: (-a.ratio if a.ratio != math.inf else -math.inf, a.label),
    )
    chosen: list[str] = []
    spent: Mass = Fraction(0) if isinstance(budget, Fraction) else 0.0
    for atom in ranked:
        if _fits(spent + atom.q_mass, budget):
            chosen.append(atom.label)
            spent = spent + atom.q_mass
    labels = tuple(sorted(chosen))
    return NPSolution(
        chosen_atoms=labels,
        objective_mass=pair.mass(labels, "p"),
        constraint_mass=pair.mass(labels, "q"),
        lr_threshold=_threshold(pair, labels),
        budget=budget,
        method="greedy",
    )


# ---------------- Exhaustive scan ----------------


def _integer_masses(pair: DiscreteMeasurePair) -> Optional[tuple[np.ndarray, np.ndarray, int]]:
    """Masses on a common denominator when all are rationals that fit int64."""
    values = [a.p_mass for a in pair.atoms] + [a.q_mass for a in pair.atoms]
    if not all(isinstance(v, (Fraction, int)) for v in values):
        return None
    denom = math.lcm(*(Fraction(v).denominator for v in values))
    if denom * len(pair.atoms) >= 2**62:
        return None
    k = len(pair.atoms)
    ints = [int(Fraction(v) * denom) for v in values]
    return np.array(ints[:k], dtype=np.int64), np.array(ints[k:], dtype=np.int64), denom


def _scan(objective: np.ndarray, constraint: np.ndarray, bound, maximize: bool, tol: float) -> int:
    """
    Best subset mask: optimize the objective subject to constraint <= bound
    (maximize) or constraint >= bound (minimize); ties go to the smaller
    constraint side for maximization, then to the smallest mask.
    """
    k = objective.size
    best_mask, best_obj, best_con = -1, None, None
    shifts = np.arange(k, dtype=np.int64)
    for start in range(0, 1 << k, _MASK_BLOCK):
        masks = np.arange(start, min(start + _MASK_BLOCK, 1 << k), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(objective.dtype)
        obj = bits @ objective
        con = bits @ constraint
        feasible = con <= bound + tol if maximize else con >= bound - tol
        if not feasible.any():
            continue
        idx = np.flatnonzero(feasible)
        f_obj, f_con = obj[idx], con[idx]
        target = f_obj.max() if maximize else f_obj.min()
        at_target = idx[f_obj == target]
        con_at = con[at_target]
        pick = at_target[np.argmin(con_at)] if maximize else at_target[0]
        cand_obj, cand_con = obj[pick], con[pick]
        better = (
            best_obj is None
            or (maximize and (cand_obj > best_obj or (cand_obj == best_obj and cand_con < best_con)))
            or (not maximize and cand_obj < best_obj)
        )
        if better:
            best_mask, best_obj, best_con = int(masks[pick]), cand_obj, cand_con
    return best_mask


def _exhaustive(pair: DiscreteMeasurePair, bound: Mass, maximize_p: bool) -> tuple[str, ...]:
    k = len(pair.atoms)
    if k > EXHAUSTIVE_LIMIT:
        raise ConfigError(f"exhaustive scan supports at most {EXHAUSTIVE_LIMIT} atoms, got {k}")
    exact = _integer_masses(pair)
    if exact is not None:
        p_int, q_int, denom = exact
        scaled = Fraction(bound) * denom
        if isinstance(bound, float):
            # float budgets get the same slack the greedy walk uses
            slack = Fraction(MASS_TOLERANCE) * denom
            scaled = scaled + slack if maximize_p else scaled - slack
        # integer feasibility: floor for <=, ceil for >=
        int_bound = math.floor(scaled) if maximize_p else math.ceil(scaled)
        tol = 0
        p_vals, q_vals = p_int, q_int
    else:
        p_vals = np.array([float(a.p_mass) for a in pair.atoms])
        q_vals = np.array([float(a.q_mass) for a in pair.atoms])
        int_bound, tol = float(bound), MASS_TOLERANCE
    if maximize_p:
        mask = _scan(p_vals, q_vals, int_bound, maximize=True, tol=tol)
    else:
        mask = _scan(q_vals, p_vals, int_bound, maximize=False, tol=tol)
    if mask < 0:
        raise ConfigError("no feasible subset")
    return tuple(a.label for j, a in enumerate(pair.atoms) if mask >> j & 1)


def exhaustive_np(pair: DiscreteMeasurePair, budget: Mass) -> NPSolution:
    """max P(A) subject to Q(A) <= budget over all 2^k subsets."""
    _check_level(budget, "budget")
    labels = _exhaustive(pair, budget, maximize_p=True)
    return NPSolution(
        chosen_atoms=labels,
        objective_mass=pair.mass(labels, "p"),
        constraint_mass=pair.mass(labels, "q"),
        lr_threshold=_threshold(pair, labels),
        budget=budget,
        method="exhaustive",
    )


def exhaustive_np_min(pair: DiscreteMeasurePair, floor: Mass) -> NPSolution:
    """min Q(A) subject to P(A) >= floor over all 2^k subsets."""
    _check_level(floor, "floor")
    labels = _exhaustive(pair, floor, maximize_p=False)
    return NPSolution(
        chosen_atoms=labels,
        objective_mass=pair.mass(labels, "q"),
        constraint_mass=pair.mass(labels, "p"),
        lr_threshold=_threshold(pair, labels),
        budget=floor,
        method="exhaustive",
    )


# ---------------- Public solvers ----------------


def solve_np(pair: DiscreteMeasurePair, budget: Mass) -> NPSolution:
    """
    Largest P(A) over sets with Q(A) <= budget. Exhaustive (authoritative) up
    to EXHAUSTIVE_LIMIT atoms, greedy beyond; `method` says which was used.
    """
    greedy = greedy_np(pair, budget)
    if len(pair.atoms) > EXHAUSTIVE_LIMIT:
        logger.debug("%d atoms: greedy likelihood-ratio solution", len(pair.atoms))
        return greedy
    best = exhaustive_np(pair, budget)
    if best.objective_mass != greedy.objective_mass:
        logger.debug(
            "greedy objective %s below exhaustive optimum %s",
            greedy.objective_mass,
            best.objective_mass,
        )
    return NPSolution(
        chosen_atoms=best.chosen_atoms,
        objective_mass=best.objective_mass,
        constraint_mass=best.constraint_mass,
        lr_threshold=best.lr_threshold,
        budget=budget,
        method=best.method,
        greedy_objective=greedy.objective_mass,
    )


def solve_np_min(pair: DiscreteMeasurePair, floor: Mass) -> NPSolution:
    """
    Smallest Q(A) over sets with P(A) >= floor, as the complement of the
    solution maximizing Q(B) subject to P(B) <= 1 - floor.
    """
    _check_level(floor, "floor")
    dual = solve_np(pair.swapped(), 1 - floor)
    excluded = set(dual.chosen_atoms)
    labels = tuple(lab for lab in pair.labels if lab not in excluded)
    greedy_objective = None
    if dual.greedy_objective is not None:
        greedy_objective = 1 - dual.greedy_objective
    return NPSolution(
        chosen_atoms=labels,
        objective_mass=pair.mass(labels, "q"),
        constraint_mass=pair.mass(labels, "p"),
        lr_threshold=_threshold(pair, labels),
        budget=floor,
        method=dual.method,
        greedy_objective=greedy_objective,
    )


__all__ = [
    "EXHAUSTIVE_LIMIT",
    "exhaustive_np",
    "exhaustive_np_min",
    "greedy_np",
    "solve_np",
    "solve_np_min",
]
