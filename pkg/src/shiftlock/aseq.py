"""Decay sequences A = (A_n) and the constants derived from them.

A sequence here is positive and strictly decreasing with A_n -> 0.  It
induces the metric d_A(x, y) = A_(first disagreement) and the norm
lip_A + sup.  Two derived quantities drive everything downstream:

  * delta = 1 - sup_n A_(n+1)/A_n, the lacunarity margin;
  * the norm inflation factor 2(A_0 + 1 + delta)/delta^2 bounding how
    much a normal form can grow the norm.

Super-continuity (A_(n+1)/A_n -> 0) is what makes the lock-in depth
search terminate; kinds report it honestly (True/False/None for
"unknown beyond truncation").
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional


class ASequence:
    kind: str = "abstract"

    def value(self, n: int) -> Fraction:
        raise NotImplementedError

    def ratio_sup(self) -> Fraction:
        """Exact sup over n of A_(n+1)/A_n."""
        raise NotImplementedError

    def super_continuous(self) -> Optional[bool]:
        raise NotImplementedError

    def delta(self) -> Fraction:
        sup = self.ratio_sup()
        if sup >= 1:
            raise ValueError("sequence is not lacunary (ratio sup >= 1)")
        return 1 - sup

    def norm_inflation(self) -> Fraction:
        """Bound on ||normal form|| / ||f||: 2(A_0 + 1 + delta)/delta^2."""
        dl = self.delta()
        return 2 * (self.value(0) + 1 + dl) / dl**2

    def first_below(self, x: Fraction, start: int = 0) -> int:
        """Smallest n >= start with A_n < x (doubling then bisection)."""
        if x <= 0:
            raise ValueError("threshold must be positive")
        if self.value(start) < x:
            return start
        lo, hi = start, max(start, 1)
        while self.value(hi) >= x:
            lo, hi = hi, 2 * hi + 1
            if hi > 10**7:
                raise ValueError("sequence does not drop below threshold in range")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.value(mid) < x:
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class Dyadic(ASequence):
    """A_n = 2^-n."""

    kind = "dyadic"

    def value(self, n: int) -> Fraction:
        return Fraction(1, 2**n)

    def ratio_sup(self) -> Fraction:
        return Fraction(1, 2)

    def super_continuous(self) -> Optional[bool]:
        return False


@dataclass(frozen=True)
class Geometric(ASequence):
    """A_n = a0 * r^n."""

    a0: Fraction
    r: Fraction
    kind = "geometric"

    def __post_init__(self):
        object.__setattr__(self, "a0", Fraction(self.a0))
        object.__setattr__(self, "r", Fraction(self.r))
        if self.a0 <= 0 or not 0 < self.r < 1:
            raise ValueError("need a0 > 0 and 0 < r < 1")

    def value(self, n: int) -> Fraction:
        return self.a0 * self.r**n

    def ratio_sup(self) -> Fraction:
        return self.r

    def super_continuous(self) -> Optional[bool]:
        return False


@dataclass(frozen=True)
class TriangularDyadic(ASequence):
    """A_n = 2^(-n(n+1)/2); ratios 2^-(n+1) -> 0, so super-continuous."""

    kind = "triangular_dyadic"

    def value(self, n: int) -> Fraction:
        return Fraction(1, 2 ** (n * (n + 1) // 2))

    def ratio_sup(self) -> Fraction:
        return Fraction(1, 2)

    def super_continuous(self) -> Optional[bool]:
        return True


@dataclass(frozen=True)
class CustomTable(ASequence):
    """Explicit initial values, then a declared geometric tail ratio.

    Values beyond the table are defined by the tail ratio; whether the
    user's intended sequence decays faster out there is unknowable from
    the table, so super_continuous() reports None.
    """

    values: tuple
    tail_ratio: Fraction
    kind = "custom_table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))
        object.__setattr__(self, "tail_ratio", Fraction(self.tail_ratio))
        if not self.values:
            raise ValueError("need at least one table value")
        if any(v <= 0 for v in self.values):
            raise ValueError("values must be positive")
        for a, b in zip(self.values, self.values[1:]):
            if b >= a:
                raise ValueError("values must be strictly decreasing")
        if not 0 < self.tail_ratio < 1:
            raise ValueError("tail ratio must lie in (0, 1)")

    def value(self, n: int) -> Fraction:
        last = len(self.values) - 1
        if n <= last:
            return self.values[n]
        return self.values[last] * self.tail_ratio ** (n - last)

    def ratio_sup(self) -> Fraction:
        ratios = [b / a for a, b in zip(self.values, self.values[1:])]
        ratios.append(self.tail_ratio)
        return max(ratios)

    def super_continuous(self) -> Optional[bool]:
        return None


def lacunarize(A: ASequence, target: Fraction = Fraction(1, 2)):
    """Comparable sequence B with ratio sup <= max(target, tail ratio).

    Returns (B, M, M2) with ||f||_A <= M ||f||_B and ||f||_B <= M2 ||f||_A.
    Only a CustomTable with a bad ratio inside its table can be improved
    without unbounded distortion (patching a kind's constant tail ratio
    would make sup A_n/B_n infinite), so everything else returns
    (A, 1, 1).
    """
    one = Fraction(1)
    if not isinstance(A, CustomTable):
        return A, one, one
    goal = max(target, A.tail_ratio)
    if A.ratio_sup() <= goal:
        return A, one, one
    patched = [A.values[0]]
    for v in A.values[1:]:
        patched.append(min(v, patched[-1] * goal))
    B = CustomTable(tuple(patched), A.tail_ratio)
    m2 = max(a / b for a, b in zip(A.values, patched))
    return B, one, m2
