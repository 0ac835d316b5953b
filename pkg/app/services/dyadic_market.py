"""
Exact computations in the binomial example market on [0, 1], where the weak
price of the claim 1 is delta while its strong price is 1.

All masses are Fractions; delta enters through its decimal form, so
delta = 0.6 gives Q-masses that are exact multiples of 3/5.
"""

import logging
from fractions import Fraction
from typing import Iterable

from app.core.exceptions import ConfigError
from app.schemas.dyadic import (
    DyadicMarket,
    DyadicMasses,
    DyadicPrice,
    DyadicRow,
    DyadicSet,
    Number,
    exact,
)
from app.schemas.np import Atom, DiscreteMeasurePair

logger = logging.getLogger(__name__)


def binary_expansion(alpha: Number, n_digits: int) -> tuple[int, ...]:
    """
    First n_digits of alpha = sum gamma_i 2^-i. Dyadic alpha gets its
    terminating expansion; alpha = 1 is 0.111... in base 2.
    """
    a = exact(alpha)
    if not 0 <= a <= 1:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    if n_digits < 1:
        raise ConfigError(f"n_digits must be positive, got {n_digits}")
    digits = []
    rest = a
    for _ in range(n_digits):
        rest *= 2
        if rest >= 1:
            digits.append(1)
            rest -= 1
        else:
            digits.append(0)
    return tuple(digits)


# ---------------- Sets and masses ----------------


def g_interval(i: int) -> tuple[Fraction, Fraction]:
    return (1 - Fraction(1, 2 ** (i - 1)), 1 - Fraction(1, 2**i))


def f_interval(n: int) -> tuple[Fraction, Fraction]:
    return (1 - Fraction(1, 2**n), Fraction(1))


def _atom_labels(n: int) -> list[str]:
    return [f"G{i:02d}" for i in range(1, n + 1)] + [f"F{n:02d}"]


def union_of_atoms(market: DyadicMarket, labels: Iterable[str]) -> DyadicSet:
    n = market.depth_n
    chosen = set(labels)
    unknown = chosen - set(_atom_labels(n))
    if unknown:
        raise ConfigError(f"unknown atoms {sorted(unknown)} at depth {n}")
    intervals = [g_interval(i) for i in range(1, n + 1) if f"G{i:02d}" in chosen]
    with_f = f"F{n:02d}" in chosen
    if with_f:
        intervals.append(f_interval(n))
    return DyadicSet(intervals=tuple(intervals), includes_one=with_f)


def masses(market: DyadicMarket, dyadic_set: DyadicSet) -> DyadicMasses:
    """
    Exact P^n and Q^n masses of a set from the depth-n algebra. A set that
    splits one of the generating atoms is not F^n-measurable and is rejected.
    """
    n = market.depth_n
    bounds = [g_interval(i) for i in range(1, n + 1)] + [f_interval(n)]
    inside = []
    for label, (left, right) in zip(_atom_labels(n), bounds):
        covered = dyadic_set.overlap(left, right)
        if covered == right - left:
            inside.append(label)
        elif covered != 0:
            raise ConfigError(f"set is not measurable at depth {n}: it splits atom {label}")
    p_mass = Fraction(0)
    q_mass = Fraction(0)
    for label in inside:
        if label.startswith("G"):
            i = int(label[1:])
            p_mass += market.p_g(i)
            q_mass += market.q_g(i)
        else:
            p_mass += market.p_f
            q_mass += market.q_f
    return DyadicMasses(dyadic_set=dyadic_set, n=n, p_mass=p_mass, q_mass=q_mass, atoms=tuple(inside))


def optimal_set(market: DyadicMarket, alpha: Number) -> DyadicSet:
    """The union of G_i over the binary digits gamma_i = 1 of alpha, i <= n."""
    digits = binary_expansion(alpha, market.depth_n)
    labels = [f"G{i:02d}" for i, g in enumerate(digits, start=1) if g]
    return union_of_atoms(market, labels)


def quantile_price_const1(market: DyadicMarket, alpha: Number) -> DyadicPrice:
    a = exact(alpha)
    digits = binary_expansion(a, market.depth_n)
    truncated = sum((Fraction(g, 2**i) for i, g in enumerate(digits, start=1)), Fraction(0))
    return DyadicPrice(
        delta=market.delta,
        alpha=a,
        n=market.depth_n,
        digits=digits,
        truncated_alpha=truncated,
        value=market.delta * truncated,
        limit=market.delta * a,
    )


def strong_price_const1(market: DyadicMarket) -> Fraction:
    """E^{Q^n}[1] = 1 on every market."""
    return Fraction(1)


def aa2_witness(market: DyadicMarket, n: int) -> DyadicMasses:
    """F_n: P-mass 2^-n tends to 0 while Q-mass tends to 1 - delta."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    at_n = market.at_depth(n)
    return masses(at_n, union_of_atoms(at_n, [f"F{n:02d}"]))


def as_measure_pair(market: DyadicMarket) -> DiscreteMeasurePair:
    """The depth-n algebra as atoms G01..Gnn, Fnn for the discrete NP solver."""
    n = market.depth_n
    atoms = [Atom(f"G{i:02d}", market.p_g(i), market.q_g(i)) for i in range(1, n + 1)]
    atoms.append(Atom(f"F{n:02d}", market.p_f, market.q_f))
    return DiscreteMeasurePair(tuple(atoms))


def naa1_witness_check(market: DyadicMarket, level: int) -> bool:
    """
    Whether every set of the depth-n algebra with Q-mass below delta 2^-level
    has P-mass below 2^-level. Enumerates all 2^(n+1) sets.
    """
    n = market.depth_n
    if n > 20:
        raise ConfigError(f"exhaustive check limited to depth 20, got {n}")
    if level < 0:
        raise ConfigError(f"level must be >= 0, got {level}")
    p_atoms = [market.p_g(i) for i in range(1, n + 1)] + [market.p_f]
    q_atoms = [market.q_g(i) for i in range(1, n + 1)] + [market.q_f]
    q_cap = market.delta / 2**level
    p_cap = Fraction(1, 2**level)
    # subset sums built by doubling: index bit j selects atom j
    p_sums = [Fraction(0)]
    q_sums = [Fraction(0)]
    for p_atom, q_atom in zip(p_atoms, q_atoms):
        p_sums = p_sums + [s + p_atom for s in p_sums]
        q_sums = q_sums + [s + q_atom for s in q_sums]
    for p_mass, q_mass in zip(p_sums, q_sums):
        if q_mass < q_cap and not p_mass < p_cap:
            logger.debug("set with Q=%s and P=%s breaks level %d", q_mass, p_mass, level)
            return False
    return True


def example_table(delta: Number, alpha: Number, n_max: int) -> list[DyadicRow]:
    """Rows n = 1..n_max of (n, P^n(A_n), Q^n(A_n), delta * alpha)."""
    if n_max < 1:
        raise ConfigError(f"n must be >= 1, got {n_max}")
    rows = []
    for n in range(1, n_max + 1):
        market = DyadicMarket(delta=delta, depth_n=n)
        result = masses(market, optimal_set(market, alpha))
        rows.append(
            DyadicRow(n=n, p_mass=result.p_mass, q_mass=result.q_mass, delta_alpha=market.delta * exact(alpha))
        )
    return rows
