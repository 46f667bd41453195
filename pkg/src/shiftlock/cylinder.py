"""Locally constant functions on the full shift, given by depth-k tables.

A depth-k function is constant on cylinders of length k, so it is a table
of m^k rationals indexed by words in lexicographic order (big-endian
base-m integers).  Variations, tail sums, the A-norm, Birkhoff sums and
the A-metric all live here and are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .aseq import ASequence
from .shift import PeriodicOrbit, Point, first_disagreement, shift


def word_index(w: Sequence[int], m: int) -> int:
    i = 0
    for s in w:
        i = i * m + s
    return i


def index_word(i: int, m: int, k: int) -> tuple:
    out = []
    for _ in range(k):
        i, r = divmod(i, m)
        out.append(r)
    return tuple(reversed(out))


@dataclass(frozen=True)
class CylinderFunction:
    """Table of m^depth values; depth 0 means a constant."""

    m: int
    depth: int
    table: tuple

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("alphabet size must be >= 2")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        object.__setattr__(self, "table", tuple(Fraction(v) for v in self.table))
        if len(self.table) != self.m**self.depth:
            raise ValueError(
                f"table needs {self.m ** self.depth} entries, got {len(self.table)}"
            )

    def value_word(self, w: Sequence[int]) -> Fraction:
        if len(w) < self.depth:
            raise ValueError("word shorter than the depth")
        return self.table[word_index(w[: self.depth], self.m)]

    def value_at(self, x: Point) -> Fraction:
        return self.table[word_index(x.prefix(self.depth), self.m)]

    def __neg__(self) -> "CylinderFunction":
        return CylinderFunction(self.m, self.depth, tuple(-v for v in self.table))

    def __add__(self, other: "CylinderFunction") -> "CylinderFunction":
        if self.m != other.m:
            raise ValueError("alphabet mismatch")
        k = max(self.depth, other.depth)
        a, b = lift_depth(self, k), lift_depth(other, k)
        return CylinderFunction(
            self.m, k, tuple(x + y for x, y in zip(a.table, b.table))
        )

    def __sub__(self, other: "CylinderFunction") -> "CylinderFunction":
        return self + (-other)

    def scale(self, c) -> "CylinderFunction":
        c = Fraction(c)
        return CylinderFunction(self.m, self.depth, tuple(c * v for v in self.table))

    def add_constant(self, c) -> "CylinderFunction":
        c = Fraction(c)
        return CylinderFunction(self.m, self.depth, tuple(v + c for v in self.table))


def constant(m: int, c, depth: int = 0) -> CylinderFunction:
    return CylinderFunction(m, depth, (Fraction(c),) * m**depth)


def lift_depth(f: CylinderFunction, k: int) -> CylinderFunction:
    """Reinterpret f as a depth-k function (k >= f.depth)."""
    if k < f.depth:
        raise ValueError("cannot lower the depth")
    if k == f.depth:
        return f
    rep = f.m ** (k - f.depth)
    return CylinderFunction(f.m, k, tuple(v for v in f.table for _ in range(rep)))


def compose_shift(h: CylinderFunction) -> CylinderFunction:
    """h o T as a depth-(h.depth + 1) function: value of w is h(w[1:])."""
    return CylinderFunction(h.m, h.depth + 1, h.table * h.m)


def variation(f: CylinderFunction, j: int) -> Fraction:
    """Largest |f(x) - f(y)| over pairs agreeing on their first j symbols."""
    if j >= f.depth:
        return Fraction(0)
    block = f.m ** (f.depth - j)
    out = Fraction(0)
    for b in range(f.m**j):
        chunk = f.table[b * block : (b + 1) * block]
        out = max(out, max(chunk) - min(chunk))
    return out


def tail_variation(f: CylinderFunction, j: int) -> Fraction:
    """V_j(f) = sum of variation(f, i) for i >= j (zero past the depth)."""
    return sum((variation(f, i) for i in range(j, f.depth)), Fraction(0))


def sup_norm(f: CylinderFunction) -> Fraction:
    return max(abs(v) for v in f.table)


def lip_a(f: CylinderFunction, A: ASequence) -> Fraction:
    """sup_j variation(f, j)/A_j; a finite max since variations vanish."""
    vals = [variation(f, j) / A.value(j) for j in range(f.depth)]
    return max(vals, default=Fraction(0))


def a_norm(f: CylinderFunction, A: ASequence) -> Fraction:
    return lip_a(f, A) + sup_norm(f)


@dataclass(frozen=True)
class NormReport:
    """Everything the norm command prints: variations, tails, parts, norm."""

    depth: int
    variations: tuple
    tails: tuple
    sup: Fraction
    lip: Fraction
    norm: Fraction


def norm_report(f: CylinderFunction, A: ASequence) -> NormReport:
    vars_ = tuple(variation(f, j) for j in range(f.depth + 1))
    tails = tuple(tail_variation(f, j) for j in range(f.depth + 1))
    s, l = sup_norm(f), lip_a(f, A)
    return NormReport(f.depth, vars_, tails, s, l, s + l)


def birkhoff_sum(f: CylinderFunction, x: Point, n: int) -> Fraction:
    out = Fraction(0)
    for _ in range(n):
        out += f.value_at(x)
        x = shift(x)
    return out


def ergodic_average(f: CylinderFunction, orbit: PeriodicOrbit) -> Fraction:
    """Mean of f along one period of the orbit."""
    x = orbit.points()[0]
    return birkhoff_sum(f, x, orbit.period) / orbit.period


def a_distance(x: Point, y: Point, A: ASequence) -> Fraction:
    """d_A(x, y) = A_(first disagreement), 0 for equal points."""
    k = first_disagreement(x, y)
    return Fraction(0) if k is None else A.value(k)


def a_distance_to_orbit(x: Point, orbit: PeriodicOrbit, A: ASequence) -> Fraction:
    return min(a_distance(x, q, A) for q in orbit.points())


def orbit_prefix_agreement(w: Sequence[int], orbit: PeriodicOrbit, cap: int) -> int:
    """Longest common prefix of w with any orbit point, capped at cap."""
    best = 0
    for q in orbit.points():
        run = 0
        for t in range(min(len(w), cap)):
            if w[t] != q.symbol(t):
                break
            run += 1
        best = max(best, run)
    return min(best, cap)


def a_distance_to_orbit_truncated(
    w: Sequence[int], orbit: PeriodicOrbit, A: ASequence
) -> Fraction:
    """A_c with c the longest agreement of the word with the orbit, c <= len(w).

    This is the depth-len(w) cylinder approximation of d_A(., orbit): it
    equals the true distance on any point extending w whenever the
    agreement is shorter than w, and reads A_len(w) otherwise.
    """
    return A.value(orbit_prefix_agreement(w, orbit, len(w)))
