"""Symbolic points, the dyadic metric, and recurrence extraction."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlock.shift import (
    OrbitSegment,
    PeriodicOrbit,
    d,
    d_to_orbit,
    first_disagreement,
    follows_in_order,
    iterate,
    min_separation,
    minimal_recurrence,
    orbit_of,
    periodic_point,
    periodic_point_from_recurrence,
    point,
    prepend,
    shadows,
    shift,
    stays_close,
)

F = Fraction


def pt(pre, per, m=2):
    return point(m, tuple(pre), tuple(per))


# --- canonical forms -------------------------------------------------------

def test_canonical_absorbs_preperiod_into_period():
    # 010·(10)^inf is just (01)^inf
    x = pt((0, 1, 0), (1, 0))
    assert x.preperiod == () and x.period == (0, 1)


def test_canonical_reduces_period_to_primitive_root():
    assert pt((), (0, 1, 0, 1)).period == (0, 1)
    assert pt((), (1, 1, 1)).period == (1,)


def test_canonical_idempotent_and_consistent_with_equality():
    x = pt((0,), (1, 0))
    y = pt((), (0, 1))
    assert x == y
    assert first_disagreement(x, y) is None


def test_noncanonical_direct_construction_rejected():
    from shiftlock.shift import Point

    with pytest.raises(ValueError):
        Point(2, (), (0, 1, 0, 1))
    with pytest.raises(ValueError):
        Point(2, (1,), (1,))


def test_symbols_and_prefix():
    x = pt((0, 0, 1), (1, 0))
    assert x.prefix(8) == (0, 0, 1, 1, 0, 1, 0, 1)
    assert x.symbol(100) == x.symbol(102)


# --- shift dynamics --------------------------------------------------------

def test_shift_drops_preperiod_then_rotates():
    x = pt((1,), (0,))
    assert shift(x) == pt((), (0,))
    y = pt((), (0, 1))
    assert shift(y) == pt((), (1, 0))
    assert shift(shift(y)) == y


def test_iterate_matches_repeated_shift():
    x = pt((0, 1, 1), (0, 0, 1))
    assert iterate(x, 5) == shift(shift(shift(shift(shift(x)))))


def test_prepend_is_a_shift_section():
    x = pt((0, 1), (1, 0))
    for a in (0, 1):
        y = prepend(x, a)
        assert y.symbol(0) == a
        assert shift(y) == x
    with pytest.raises(ValueError):
        prepend(x, 2)


# --- metric ----------------------------------------------------------------

def test_first_disagreement_frozen_cases():
    assert first_disagreement(pt((), (0, 1)), pt((), (0, 1))) is None
    assert first_disagreement(pt((), (0, 1)), pt((), (0, 1, 1, 0))) == 2
    assert first_disagreement(pt((1,), (0,)), pt((), (0,))) == 0


def test_d_frozen_cases():
    assert d(pt((), (0, 1)), pt((), (0, 1))) == 0
    assert d(pt((), (0, 1)), pt((), (0, 1, 1, 0))) == F(1, 4)
    assert d(pt((1,), (0,)), pt((), (0,))) == 1


def test_d_alphabet_mismatch():
    with pytest.raises(ValueError):
        d(pt((), (0,)), point(3, (), (0,)))


points_strategy = st.builds(
    pt,
    st.lists(st.integers(0, 1), max_size=4),
    st.lists(st.integers(0, 1), min_size=1, max_size=4),
)


@settings(max_examples=200, deadline=None)
@given(points_strategy, points_strategy, points_strategy)
def test_ultrametric_inequality(x, y, z):
    assert d(x, z) <= max(d(x, y), d(y, z))


@settings(max_examples=200, deadline=None)
@given(points_strategy, points_strategy)
def test_shift_expands_distance_by_at_most_two(x, y):
    if d(x, y) < 1:
        assert d(shift(x), shift(y)) <= 2 * d(x, y)


# --- orbits ----------------------------------------------------------------

def test_orbit_necklace_is_lex_least_rotation():
    assert orbit_of(pt((), (1, 0))).necklace == (0, 1)
    assert orbit_of(pt((), (1, 1, 0))).necklace == (0, 1, 1)


def test_orbit_rejects_imprimitive_or_rotated_necklace():
    with pytest.raises(ValueError):
        PeriodicOrbit(2, (0, 1, 0, 1))
    with pytest.raises(ValueError):
        PeriodicOrbit(2, (1, 0))


def test_orbit_points_and_membership():
    Y = PeriodicOrbit(2, (0, 1, 1))
    assert len(Y.points()) == 3
    assert pt((), (1, 1, 0)) in Y
    assert pt((), (0, 1)) not in Y
    assert pt((0,), (0, 1, 1)) not in Y  # not periodic


def test_min_separation_values():
    assert min_separation(PeriodicOrbit(2, (0,))) == 1
    assert min_separation(PeriodicOrbit(2, (0, 1))) == 1
    # 011 vs 110 vs 101: closest pair differs at index 1
    assert min_separation(PeriodicOrbit(2, (0, 1, 1))) == F(1, 2)
    # closest rotations 10110 / 10101 differ at index 3
    assert min_separation(PeriodicOrbit(2, (0, 1, 0, 1, 1))) == F(1, 8)


def test_d_to_orbit_minimizes_over_points():
    Y = PeriodicOrbit(2, (0, 1))
    assert d_to_orbit(pt((), (0, 1)), Y) == 0
    assert d_to_orbit(pt((0, 1, 0, 0), (1,)), Y) == F(1, 8)


# --- shadowing and closeness ----------------------------------------------

def test_shadows_frozen_cases():
    base = pt((), (0, 1))
    two = OrbitSegment(base, 0, 2)
    assert shadows(pt((), (0, 1)), two, F(1)) is True
    x = pt((0, 1, 1, 1), (0,))
    one = OrbitSegment(base, 0, 1)
    assert shadows(x, one, F(1, 4)) is True
    assert shadows(x, one, F(1, 8)) is False


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(0, 1), min_size=1, max_size=4),
    st.integers(1, 6),
    st.integers(0, 5),
)
def test_shadowing_forces_geometric_decay(per, length, start):
    # agreement at every step of a window forces sharper agreement earlier
    y = pt((), per)
    base = iterate(y, start)
    x = pt(tuple(base.symbol(t) for t in range(length + 2)), (1, 1, 0))
    seg = OrbitSegment(y, start, length)
    rho = max(d(iterate(x, i), iterate(y, start + i)) for i in range(length))
    if rho < 1:
        assert shadows(x, seg, rho)
        for j in range(length):
            bound = rho * F(1, 2) ** ((length - 1) - j)
            assert d(iterate(x, j), iterate(y, start + j)) <= bound


def test_stays_close_frozen_cases():
    Y = PeriodicOrbit(2, (0, 1))
    for q in Y.points():
        assert stays_close(q, Y, F(1, 64), 10)
    x = pt((0, 1, 0, 0), (1,))
    # distances to Y along the first four iterates: 1/8, 1/4, 1/2, 1/2
    assert d_to_orbit(x, Y) == F(1, 8)
    assert d_to_orbit(iterate(x, 1), Y) == F(1, 4)
    assert d_to_orbit(iterate(x, 2), Y) == F(1, 2)
    assert stays_close(x, Y, F(1, 4), 2) is True
    assert stays_close(x, Y, F(1, 4), 4) is False


def test_follows_in_order_along_own_orbit():
    y = pt((), (0, 1, 1, 0, 1))
    seg = OrbitSegment(y, 0, 5)
    assert follows_in_order(y, seg, 4) is True


def test_follows_in_order_rejects_ties():
    # over a 3-letter alphabet (2)^inf is at distance 1 from every segment point
    z = point(3, (), (2,))
    y = point(3, (), (0, 1))
    assert follows_in_order(z, OrbitSegment(y, 0, 2), 1) is False


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=5), st.integers(1, 4))
def test_close_points_follow_in_order(per, k):
    # staying within a quarter of the separation for k+1 steps forces
    # single-offset tracking for k steps
    y = pt((), per)
    Y = orbit_of(y)
    rho = min_separation(Y) / 4
    n = k + 1 + len(per) + 3  # enough copied symbols to stay rho-close
    x = pt(tuple(y.symbol(t) for t in range(n)), (1, 1, 0))
    if stays_close(x, Y, rho, k + 1):
        seg = OrbitSegment(y, 0, len(y.period))  # one full (primitive) period
        assert follows_in_order(x, seg, k)


# --- recurrence ------------------------------------------------------------

def brute_minimal_recurrence(x, k, horizon):
    hits = []
    for j in range(1, horizon + 1):
        for i in range(j):
            wi = tuple(x.symbol(i + t) for t in range(k))
            wj = tuple(x.symbol(j + t) for t in range(k))
            if wi == wj:
                hits.append((i, j))
    return min(hits, key=lambda p: (p[1], p[0])) if hits else None


def test_minimal_recurrence_frozen_cases():
    assert minimal_recurrence(pt((), (0,)), 1, 3) == (0, 1)
    assert minimal_recurrence(pt((0, 0, 1, 0, 1, 1, 0, 1), (0,)), 1, 3) == (0, 1)
    x = pt((), (0, 1, 1, 0))
    assert minimal_recurrence(x, 2, 8) == brute_minimal_recurrence(x, 2, 8) == (0, 4)


def test_minimal_recurrence_horizon_too_small():
    with pytest.raises(ValueError, match="horizon"):
        minimal_recurrence(pt((), (0, 1, 1, 0)), 2, 3)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(0, 1), max_size=5),
    st.lists(st.integers(0, 1), min_size=1, max_size=4),
    st.integers(1, 3),
)
def test_minimal_recurrence_matches_brute_force(pre, per, k):
    x = pt(pre, per)
    horizon = 2**k + 1
    got = minimal_recurrence(x, k, horizon)
    assert got == brute_minimal_recurrence(x, k, horizon)
    i, j = got
    assert d(iterate(x, i), iterate(x, j)) <= F(1, 2**k)


def test_periodic_point_from_recurrence_frozen_cases():
    assert periodic_point_from_recurrence(pt((), (0, 1)), 0, 2).necklace == (0, 1)
    assert periodic_point_from_recurrence(pt((0,), (1, 0)), 1, 3).necklace == (0, 1)


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(0, 1), max_size=5),
    st.lists(st.integers(0, 1), min_size=1, max_size=4),
    st.integers(1, 3),
)
def test_recurrence_orbit_separation_and_shadowing(pre, per, k):
    x = pt(pre, per)
    i, j = minimal_recurrence(x, k, 2**k + 1)
    Y = periodic_point_from_recurrence(x, i, j)
    # minimality forces well-separated orbit points
    assert min_separation(Y) >= F(1, 2 ** (k - 1))
    # the recurrence segment of x tracks the new orbit at depth k+1
    from shiftlock.shift import aligned_point_from_recurrence

    y = aligned_point_from_recurrence(x, i, j)
    assert orbit_of(y) == Y
    seg = OrbitSegment(y, i, j - i)
    assert shadows(iterate(x, i), seg, F(1, 2 ** (k + 1)))
