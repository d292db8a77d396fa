"""Canonical cubes and clauses over state (latch) variables.

A literal is a signed variable id: ``+v`` means the variable is true, ``-v``
means false.  Cubes are conjunctions, clauses are disjunctions; both are kept
canonically sorted by variable id with at most one literal per variable, so
equal objects compare and hash equal regardless of construction order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


def _canonical(lits: Iterable[int]) -> tuple[int, ...]:
    out = sorted(set(lits), key=lambda l: (abs(l), l))
    seen: set[int] = set()
    for l in out:
        if l == 0:
            raise ValueError("literal 0 is not allowed")
        v = abs(l)
        if v in seen:
            raise ValueError(f"contradictory or duplicate literals on variable {v}")
        seen.add(v)
    return tuple(out)


@dataclass(frozen=True, order=True)
class Cube:
    """Conjunction of literals (a partial state assignment)."""

    lits: tuple[int, ...] = ()

    @classmethod
    def of(cls, lits: Iterable[int]) -> "Cube":
        return cls(_canonical(lits))

    def negate(self) -> "Clause":
        return Clause(tuple(-l for l in self.lits))

    def variables(self) -> tuple[int, ...]:
        return tuple(abs(l) for l in self.lits)

    def subsumes(self, other: "Cube") -> bool:
        """True if every literal here also appears in ``other`` (self covers other)."""
        return set(self.lits) <= set(other.lits)

    def without(self, lit: int) -> "Cube":
        return Cube(tuple(l for l in self.lits if l != lit))

    def __iter__(self) -> Iterator[int]:
        return iter(self.lits)

    def __len__(self) -> int:
        return len(self.lits)

    def __contains__(self, lit: int) -> bool:
        return lit in self.lits


@dataclass(frozen=True, order=True)
class Clause:
    """Disjunction of literals."""

    lits: tuple[int, ...] = ()

    @classmethod
    def of(cls, lits: Iterable[int]) -> "Clause":
        return cls(_canonical(lits))

    def negate(self) -> Cube:
        return Cube(tuple(-l for l in self.lits))

    def variables(self) -> tuple[int, ...]:
        return tuple(abs(l) for l in self.lits)

    def subsumed_by(self, other: "Clause") -> bool:
        """True if ``other``'s literals are a subset of this clause's literals."""
        return set(other.lits) <= set(self.lits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.lits)

    def __len__(self) -> int:
        return len(self.lits)

    def __contains__(self, lit: int) -> bool:
        return lit in self.lits
