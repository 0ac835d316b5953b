import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

Mass = Union[float, Fraction]

MASS_TOLERANCE = 1e-12


def parse_mass(text: str) -> Mass:
    """'3/8' parses exactly, anything else as a float."""
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    return float(text)


def exact_sum(values: Iterable[Mass]) -> Mass:
    values = list(values)
    if values and all(isinstance(v, (Fraction, int)) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(values)


@dataclass(frozen=True)
class Atom:
    label: str
    p_mass: Mass
    q_mass: Mass

    @property
    def ratio(self) -> float | Fraction:
        """dP/dQ on the atom; +inf where Q vanishes and P does not."""
        if self.q_mass == 0:
            return math.inf if self.p_mass > 0 else 0
        return self.p_mass / self.q_mass


@dataclass(frozen=True)
class DiscreteMeasurePair:
    """
    Two probability measures on the same finite set of atoms. Fractions keep
    every mass comparison exact; floats are checked to MASS_TOLERANCE.
    """

    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        labels = [a.label for a in self.atoms]
        if len(set(labels)) != len(labels):
            raise ValueError("atom labels must be unique")
        if not self.atoms:
            raise ValueError("a measure pair needs at least one atom")
        for atom in self.atoms:
            if atom.p_mass < 0 or atom.q_mass < 0:
                raise ValueError(f"negative mass on atom {atom.label!r}")
        for name, total in (("p", self.total_p), ("q", self.total_q)):
            if abs(total - 1) > MASS_TOLERANCE:
                raise ValueError(f"{name} masses sum to {float(total)}, not 1")
        # canonical label order drives every tie-break
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms, key=lambda a: a.label)))

    @classmethod
    def from_masses(
        cls,
        p: Iterable[Mass],
        q: Iterable[Mass],
        labels: Optional[Iterable[str]] = None,
    ) -> "DiscreteMeasurePair":
        p, q = list(p), list(q)
        if len(p) != len(q):
            raise ValueError("p and q need the same number of atoms")
        names = list(labels) if labels is not None else [f"atom{i + 1}" for i in range(len(p))]
        return cls(tuple(Atom(lab, pm, qm) for lab, pm, qm in zip(names, p, q)))

    @classmethod
    def from_csv(cls, source: Union[str, Path, io.TextIOBase]) -> "DiscreteMeasurePair":
        """Rows `label,p,q`; a header row is skipped when its masses do not parse."""
        if isinstance(source, (str, Path)):
            with open(source, newline="") as handle:
                rows = list(csv.reader(handle))
        else:
            rows = list(csv.reader(source))
        atoms = []
        for row in rows:
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 3:
                raise ValueError(f"expected label,p,q but got {row!r}")
            try:
                atoms.append(Atom(row[0].strip(), parse_mass(row[1]), parse_mass(row[2])))
            except ValueError:
                if atoms:
                    raise
        return cls(tuple(atoms))

    @property
    def total_p(self) -> Mass:
        return exact_sum(a.p_mass for a in self.atoms)

    @property
    def total_q(self) -> Mass:
        return exact_sum(a.q_mass for a in self.atoms)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(a.label for a in self.atoms)

    def swapped(self) -> "DiscreteMeasurePair":
        return DiscreteMeasurePair(tuple(Atom(a.label, a.q_mass, a.p_mass) for a in self.atoms))

    def mass(self, labels: Iterable[str], side: str) -> Mass:
        chosen = set(labels)
        attr = "p_mass" if side == "p" else "q_mass"
        return exact_sum(getattr(a, attr) for a in self.atoms if a.label in chosen)


@dataclass(frozen=True)
class NPSolution:
    """
    Optimal non-randomized test set. For solve_np the objective is the P side
    and the constraint the Q side; solve_np_min reports the Q side as objective.
    """

    chosen_atoms: tuple[str, ...]
    objective_mass: Mass
    constraint_mass: Mass
    lr_threshold: Optional[float | Fraction]
    budget: Mass
    method: str
    greedy_objective: Optional[Mass] = field(default=None)

    def is_level_set(self, pair: DiscreteMeasurePair) -> bool:
        """Whether every chosen atom has a likelihood ratio >= every excluded one's (ties allowed)."""
        chosen = set(self.chosen_atoms)
        inside = [a.ratio for a in pair.atoms if a.label in chosen]
        outside = [a.ratio for a in pair.atoms if a.label not in chosen]
        if not inside or not outside:
            return True
        return min(inside) >= max(outside)
