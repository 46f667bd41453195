"""Points of the full shift, the dyadic metric, and recurrence structure.

The space is the one-sided full shift on m symbols.  The only points that
can be represented exactly are the eventually periodic ones, written
u * v^inf with a finite preperiod u and a repeating block v.  Every
operation here is exact: distances are Fractions, equality is decidable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

Word = tuple  # tuple of int symbols


def check_word(w: Sequence[int], m: int) -> tuple:
    w = tuple(w)
    for s in w:
        if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < m:
            raise ValueError(f"symbol {s!r} out of range for alphabet of size {m}")
    return w


def primitive_root(w: tuple) -> tuple:
    """Shortest block whose repetition gives w."""
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w == w[:d] * (n // d):
            return w[:d]
    return w


def canonical_parts(preperiod: tuple, period: tuple) -> tuple[tuple, tuple]:
    """Reduce to primitive period and shortest preperiod.

    Absorbing a trailing preperiod symbol equal to the last period symbol
    rotates the period right by one; repeating this terminates and the
    result is the unique shortest representation.
    """
    period = primitive_root(period)
    preperiod = tuple(preperiod)
    while preperiod and preperiod[-1] == period[-1]:
        preperiod = preperiod[:-1]
        period = period[-1:] + period[:-1]
    return preperiod, period


@dataclass(frozen=True)
class Point:
    """Eventually periodic point preperiod * period^inf, in canonical form.

    Use the `point` factory unless the arguments are already canonical;
    the constructor rejects non-canonical input so that dataclass equality
    coincides with equality of points.
    """

    m: int
    preperiod: tuple
    period: tuple

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("alphabet size must be >= 2")
        check_word(self.preperiod, self.m)
        check_word(self.period, self.m)
        if not self.period:
            raise ValueError("period block must be nonempty")
        if canonical_parts(self.preperiod, self.period) != (self.preperiod, self.period):
            raise ValueError("not in canonical form; use the point() factory")

    def symbol(self, n: int) -> int:
        u = self.preperiod
        if n < len(u):
            return u[n]
        return self.period[(n - len(u)) % len(self.period)]

    def prefix(self, n: int) -> tuple:
        return tuple(self.symbol(i) for i in range(n))

    @property
    def eventual_period(self) -> int:
        return len(self.period)

    def is_periodic(self) -> bool:
        return not self.preperiod

    def __repr__(self):
        u = "".join(map(str, self.preperiod))
        v = "".join(map(str, self.period))
        return f"Point({self.m}, {u}({v})^inf)" if u else f"Point({self.m}, ({v})^inf)"


def point(m: int, preperiod: Sequence[int], period: Sequence[int]) -> Point:
    pre, per = canonical_parts(tuple(preperiod), tuple(period))
    return Point(m, pre, per)


def periodic_point(m: int, block: Sequence[int]) -> Point:
    return point(m, (), block)


def shift(x: Point) -> Point:
    """Drop the first symbol."""
    if x.preperiod:
        return Point(x.m, x.preperiod[1:], x.period)
    v = x.period
    return Point(x.m, (), v[1:] + v[:1]) if len(v) > 1 else x


def iterate(x: Point, n: int) -> Point:
    for _ in range(n):
        x = shift(x)
    return x


def prepend(x: Point, a: int) -> Point:
    """The preimage of x under the shift that starts with symbol a."""
    if not 0 <= a < x.m:
        raise ValueError("symbol out of range")
    return point(x.m, (a,) + x.preperiod, x.period)


def first_disagreement(x: Point, y: Point) -> Optional[int]:
    """Index of the first differing symbol, or None when x == y.

    If the streams agree past both preperiods for a full lcm of the two
    periods they agree everywhere, so the scan below is complete.
    """
    if x.m != y.m:
        raise ValueError("points live on different alphabets")
    if x == y:
        return None
    bound = max(len(x.preperiod), len(y.preperiod)) + lcm(
        len(x.period), len(y.period)
    )
    for n in range(bound):
        if x.symbol(n) != y.symbol(n):
            return n
    raise AssertionError("distinct points must disagree within the scan bound")


def d(x: Point, y: Point) -> Fraction:
    """Dyadic distance 2^-(first disagreement), 0 for equal points."""
    k = first_disagreement(x, y)
    return Fraction(0) if k is None else Fraction(1, 2**k)


@dataclass(frozen=True)
class PeriodicOrbit:
    """Orbit of a periodic point, named by the lex-least rotation (necklace)."""

    m: int
    necklace: tuple

    def __post_init__(self):
        check_word(self.necklace, self.m)
        if not self.necklace:
            raise ValueError("empty necklace")
        if primitive_root(self.necklace) != self.necklace:
            raise ValueError("necklace must be primitive")
        if min(self.rotations()) != self.necklace:
            raise ValueError("necklace must be the lex-least rotation")

    def rotations(self) -> list:
        w = self.necklace
        return [w[i:] + w[:i] for i in range(len(w))]

    @property
    def period(self) -> int:
        return len(self.necklace)

    def points(self) -> list:
        return [Point(self.m, (), rot) for rot in self.rotations()]

    def __contains__(self, x: Point) -> bool:
        return x.m == self.m and not x.preperiod and x.period in self.rotations()

    def __repr__(self):
        return f"PeriodicOrbit({self.m}, {''.join(map(str, self.necklace))})"


def orbit_of(x: Point) -> PeriodicOrbit:
    if x.preperiod:
        raise ValueError("only periodic points have a periodic orbit")
    w = x.period
    neck = min(w[i:] + w[:i] for i in range(len(w)))
    return PeriodicOrbit(x.m, neck)


def d_to_orbit(x: Point, orbit: PeriodicOrbit) -> Fraction:
    return min(d(x, q) for q in orbit.points())


def min_separation(orbit: PeriodicOrbit) -> Fraction:
    """Smallest distance between distinct orbit points (1 for fixed points)."""
    pts = orbit.points()
    if len(pts) == 1:
        return Fraction(1)
    return min(
        d(pts[i], pts[j]) for i in range(len(pts)) for j in range(i + 1, len(pts))
    )


@dataclass(frozen=True)
class OrbitSegment:
    """Consecutive piece T^start y, ..., T^(start+length-1) y of an orbit."""

    base: Point
    start: int
    length: int

    def __post_init__(self):
        if self.length < 1 or self.start < 0:
            raise ValueError("segment needs start >= 0 and length >= 1")

    def points(self) -> list:
        out = []
        q = iterate(self.base, self.start)
        for _ in range(self.length):
            out.append(q)
            q = shift(q)
        return out


def shadows(x: Point, segment: OrbitSegment, rho: Fraction) -> bool:
    """Does the orbit of x stay within rho of the segment, step for step?"""
    q = x
    for target in segment.points():
        if d(q, target) > rho:
            return False
        q = shift(q)
    return True


def stays_close(x: Point, orbit: PeriodicOrbit, eps: Fraction, p: int) -> bool:
    """Are T^i x within eps of the orbit (as a set) for all 0 <= i < p?"""
    q = x
    for _ in range(p):
        if d_to_orbit(q, orbit) > eps:
            return False
        q = shift(q)
    return True


def unique_closest(x: Point, pts: Sequence[Point]) -> Optional[int]:
    """Index of the strictly closest point among pts, or None on a tie."""
    dists = [d(x, q) for q in pts]
    best = min(dists)
    idx = [i for i, v in enumerate(dists) if v == best]
    return idx[0] if len(idx) == 1 else None


def follows_in_order(x: Point, segment: OrbitSegment, steps: int) -> bool:
    """x tracks the segment in order for `steps` transitions.

    At each time the closest segment point must be unique, and it must
    advance by T from one time to the next (membership is by point
    equality, so a full-period segment wraps around naturally).
    """
    pts = segment.points()
    q = x
    s = unique_closest(q, pts)
    if s is None:
        return False
    for _ in range(steps):
        q = shift(q)
        nxt = shift(pts[s])
        if nxt not in pts:
            return False
        s_next = unique_closest(q, pts)
        if s_next is None or pts[s_next] != nxt:
            return False
        s = s_next
    return True


def minimal_recurrence(x: Point, k: int, horizon: int) -> tuple[int, int]:
    """Smallest j, then smallest i < j, with (x)_i..(x)_(i+k-1) = (x)_j..(x)_(j+k-1).

    That window condition is exactly d(T^i x, T^j x) <= 2^-k.  Any horizon
    exceeding m^k guarantees a pair by pigeonhole; scanning stops at
    j = horizon and raises if no repeat appeared by then.
    """
    if k < 1:
        raise ValueError("recurrence depth must be >= 1")
    seen: dict = {}
    window = tuple(x.symbol(t) for t in range(k))
    for j in range(horizon + 1):
        if j > 0:
            window = window[1:] + (x.symbol(j + k - 1),)
        if window in seen:
            return (seen[window], j)
        seen[window] = j
    raise ValueError(f"horizon too small: no depth-{k} recurrence by j={horizon}")


def aligned_point_from_recurrence(x: Point, i: int, j: int) -> Point:
    """The (j-i)-periodic point y with y_t = (x)_(i + ((t-i) mod (j-i))).

    Aligned so the symbols of y on [i, j) match x there; consequently when
    (i, j) is a depth-k recurrence of x, the segment T^i x .. T^(j-1) x
    stays within 2^-(k+1) of the orbit of y.
    """
    if not 0 <= i < j:
        raise ValueError("need 0 <= i < j")
    p = j - i
    block = tuple(x.symbol(i + t) for t in range(p))
    w = tuple(block[(t - i) % p] for t in range(p))
    return point(x.m, (), w)


def periodic_point_from_recurrence(x: Point, i: int, j: int) -> PeriodicOrbit:
    """Orbit of the periodic point that repeats the block (x)_i .. (x)_(j-1)."""
    return orbit_of(aligned_point_from_recurrence(x, i, j))
