from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from app.core.exceptions import ConfigError

Number = Union[int, float, str, Fraction]


def exact(value: Number) -> Fraction:
    """
    Exact rational for a user-facing number. Floats go through their shortest
    decimal form, so 0.6 becomes 3/5 rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class DyadicMarket:
    """
    The binomial market on [0, 1] with Lebesgue P^n: at depth n the algebra is
    generated by G_1..G_n and F_n, with G_i = [1 - 2^-(i-1), 1 - 2^-i) and
    F_n = [1 - 2^-n, 1].
    """

    delta: Fraction
    depth_n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", exact(self.delta))
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if isinstance(self.depth_n, bool) or not isinstance(self.depth_n, int) or self.depth_n < 1:
            raise ConfigError(f"depth_n must be a positive integer, got {self.depth_n!r}")

    def at_depth(self, n: int) -> "DyadicMarket":
        return DyadicMarket(delta=self.delta, depth_n=n)

    # masses of the generating atoms

    def p_g(self, i: int) -> Fraction:
        return Fraction(1, 2**i)

    def q_g(self, i: int) -> Fraction:
        return self.delta * Fraction(1, 2**i)

    @property
    def p_f(self) -> Fraction:
        return Fraction(1, 2**self.depth_n)

    @property
    def q_f(self) -> Fraction:
        return 1 - self.delta * (1 - Fraction(1, 2**self.depth_n))

    def q_e(self, i: int) -> Fraction:
        """Q^n(E_i) = delta (1 - 2^-i), E_i = [0, 1 - 2^-i)."""
        if not 1 <= i <= self.depth_n:
            raise ConfigError(f"E_{i} is not in the depth-{self.depth_n} algebra")
        return self.delta * (1 - Fraction(1, 2**i))


@dataclass(frozen=True)
class DyadicSet:
    """
    Finite union of disjoint half-open intervals [l, r) in [0, 1] with dyadic
    endpoints; `includes_one` adds the point 1 (irrelevant for the masses).
    """

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()
    includes_one: bool = False

    def __post_init__(self) -> None:
        cleaned = []
        for left, right in self.intervals:
            left, right = Fraction(left), Fraction(right)
            if not 0 <= left < right <= 1:
                raise ConfigError(f"bad interval [{left}, {right})")
            if (left.denominator & (left.denominator - 1)) or (right.denominator & (right.denominator - 1)):
                raise ConfigError(f"interval [{left}, {right}) has non-dyadic endpoints")
            cleaned.append((left, right))
        cleaned.sort()
        for (_, r0), (l1, _) in zip(cleaned, cleaned[1:]):
            if l1 < r0:
                raise ConfigError("intervals overlap")
        object.__setattr__(self, "intervals", tuple(cleaned))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def overlap(self, left: Fraction, right: Fraction) -> Fraction:
        """Lebesgue measure of the set inside [left, right)."""
        total = Fraction(0)
        for l, r in self.intervals:
            lo, hi = max(l, left), min(r, right)
            if hi > lo:
                total += hi - lo
        return total

    def lebesgue(self) -> Fraction:
        return sum((r - l for l, r in self.intervals), Fraction(0))


@dataclass(frozen=True)
class DyadicMasses:
    """A set together with its exact masses in one market."""

    dyadic_set: DyadicSet
    n: int
    p_mass: Fraction
    q_mass: Fraction
    atoms: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class DyadicPrice:
    """
    alpha-quantile price of the claim 1 at depth n: delta times alpha truncated
    to n binary digits, with the n -> inf limit delta * alpha.
    """

    delta: Fraction
    alpha: Fraction
    n: int
    digits: tuple[int, ...]
    truncated_alpha: Fraction
    value: Fraction
    limit: Fraction


@dataclass(frozen=True)
class DyadicRow:
    n: int
    p_mass: Fraction
    q_mass: Fraction
    delta_alpha: Fraction
