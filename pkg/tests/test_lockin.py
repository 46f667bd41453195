from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlock import aseq
from shiftlock.cylinder import CylinderFunction, a_norm, constant, ergodic_average
from shiftlock.lockin import (
    LockinConstants,
    adversarial_perturbation,
    backward_walk,
    build_perturbation,
    choose_k,
    constants,
    cycle_to_orbit,
    empirical_lockin_radius,
    lockin_report,
    lockin_trial,
    offcycle_distance_gap,
    sample_perturbation,
    shadow_gap_check,
)
from shiftlock.maxplus import (
    CertificateError,
    maximizing_support,
    normal_form,
    simple_cycles,
)
from shiftlock.packed import Int64Table, zero_table
from shiftlock.shift import PeriodicOrbit, periodic_point, point

TRI = aseq.TriangularDyadic()
DY = aseq.Dyadic()
HALF = Fraction(1, 2)

F10 = CylinderFunction(2, 2, (0, 0, 2, 0))
Y01 = PeriodicOrbit(2, (0, 1))

# Gentle first ratio, cliff after: the admissibility inequality needs the
# ratio A_{k+1}/A_k to be small at the chosen k, so a uniformly fast decay
# is useless (it inflates ||f||_A by the same factor it gains).
FASTA = aseq.CustomTable((1, HALF, Fraction(1, 2**50)), Fraction(1, 2**50))

# A second orbit (0) sitting DELTA below the locked one keeps the rival
# mean lattice fine enough for the near-tie census to finish.
DELTA = Fraction(1, 2**32)
EPS4 = Fraction(1, 2**30)
F4 = CylinderFunction(2, 2, (1 - DELTA, 0, 2, 0))


@pytest.fixture(scope="module")
def toy_plan():
    return build_perturbation(F10, FASTA, HALF)


@pytest.fixture(scope="module")
def tie_plan():
    return build_perturbation(F4, FASTA, EPS4, K=4)


def _materialize(plan, h):
    ft = plan.model.f_tilde_cylinder()
    ht = h.to_cylinder()
    table = tuple(a + b for a, b in zip(ft.table, ht.table))
    return CylinderFunction(plan.model.m, plan.K, table)


def _direct_verdict(plan, h):
    """Unique-maximizer verdict recomputed through the foundational lane."""
    nf = normal_form(_materialize(plan, h), plan.A)
    orbits, unique, truncated = maximizing_support(nf)
    assert not truncated
    return nf.beta, unique and orbits == [plan.Y]


# --- regime constants -------------------------------------------------------------


def test_worked_example_constants():
    cst = constants(F10, TRI, HALF, 15, 2)
    assert a_norm(F10, TRI) == 6
    assert cst.gamma == 20
    assert cst.lip_bound == 3200
    assert cst.sigma == Fraction(1, 2**123)
    assert cst.alpha == Fraction(6784, 2**136)
    assert TRI.first_below(cst.alpha / 100) == 16


def test_choose_k_worked_example():
    assert choose_k(F10, TRI, HALF) == 15


def test_choose_k_monotone_in_eps():
    ks = [choose_k(F10, TRI, e) for e in (Fraction(1, 64), HALF, Fraction(3, 4))]
    assert ks[2] <= ks[1] <= ks[0]
    assert ks[1] == 15


def test_choose_k_refuses_constant_ratio():
    with pytest.raises(ValueError, match="ratio"):
        choose_k(F10, DY, HALF)


def test_choose_k_eps_domain():
    for eps in (0, 1, 2, -HALF):
        with pytest.raises(ValueError):
            choose_k(F10, TRI, eps)


def test_constants_domain():
    for eps in (1, -HALF, Fraction(5, 4)):
        with pytest.raises(ValueError):
            constants(F10, TRI, eps, 3, 2)
    with pytest.raises(ValueError):
        constants(F10, TRI, HALF, 0, 2)
    with pytest.raises(ValueError):
        constants(F10, TRI, HALF, 3, 0)
    # eps = 0 builds a degenerate regime: no positive excursion gap
    cst = constants(F10, TRI, 0, 3, 2)
    assert cst.alpha < 0 < cst.sigma


def test_sigma_formula_dyadic():
    # A_k / (4p) with A_3 = 1/8, p = 2
    assert constants(F10, DY, HALF, 3, 2).sigma == Fraction(1, 64)


def test_constants_monotonicity():
    a1 = constants(F10, TRI, HALF, 15, 2).alpha
    a2 = constants(F10, TRI, Fraction(3, 4), 15, 2).alpha
    assert a2 > a1
    s1 = constants(F10, TRI, HALF, 15, 2).sigma
    s2 = constants(F10, TRI, HALF, 15, 4).sigma
    assert s2 < s1


# --- plan construction ------------------------------------------------------------


def test_toy_plan_shape(toy_plan):
    pl = toy_plan
    assert (pl.k, pl.K, pl.p) == (1, 7, 2)
    assert pl.Y == Y01
    assert pl.x == periodic_point(2, (0, 1))
    assert pl.recurrence == (0, 2)
    assert pl.mode == "certified"
    assert pl.certificate == "zero-potential"
    assert pl.beta_tilde == -HALF * FASTA.value(7)
    assert pl.locked and pl.margin0 == pl.beta_tilde - pl.lambda2 > 0
    assert pl.W == Fraction(1, 8)
    # the tie window is combinatorially dense here, so the census truncates
    assert pl.tie_complete is False and pl.tie_cycles == ()
    # the runner-up really attains lambda2
    assert pl.model.cycle_mean(pl.runner_up) == pl.lambda2


def test_margin_lower_bounds(toy_plan):
    pl = toy_plan
    gap = offcycle_distance_gap(pl)
    A_K, A_k = FASTA.value(pl.K), FASTA.value(pl.k)
    assert pl.margin0 >= pl.eps * gap - 2 * A_K
    assert pl.margin0 >= pl.eps * A_k / pl.p - 2 * A_K


def test_plan_validation():
    with pytest.raises(ValueError):
        build_perturbation(F10, FASTA, 1)
    with pytest.raises(ValueError):
        build_perturbation(F10, FASTA, -HALF)
    with pytest.raises(ValueError):
        build_perturbation(F10, FASTA, HALF, k=0)
    with pytest.raises(ValueError, match="shallow"):
        build_perturbation(F10, FASTA, HALF, K=1)
    with pytest.raises(ValueError, match="edge words"):
        build_perturbation(F10, FASTA, HALF, K=25, edge_cap=10**6)
    with pytest.raises(ValueError, match="maximize"):
        build_perturbation(F10, FASTA, HALF, x=periodic_point(2, (0,)))
    with pytest.raises(ValueError, match="alphabet"):
        build_perturbation(F10, FASTA, HALF, x=periodic_point(3, (0, 1, 2)))


def test_preperiodic_base_point():
    x = point(2, (1,), (0, 1))
    pl = build_perturbation(F10, FASTA, HALF, x=x)
    assert pl.x == x and pl.Y == Y01 and pl.k == 1


def test_cycle_to_orbit_roundtrip(toy_plan):
    assert cycle_to_orbit(2, toy_plan.K, toy_plan.model.y_edges) == Y01


# --- the sparse near-tie regime ---------------------------------------------------


def test_tie_plan_census(tie_plan):
    pl = tie_plan
    assert (pl.k, pl.K, pl.p) == (1, 4, 2)
    assert pl.mode == "certified" and pl.certificate == "zero-potential"
    assert pl.W == DELTA
    A1, A2, A3, A4 = (FASTA.value(i) for i in (1, 2, 3, 4))
    lam2 = -(DELTA + EPS4 * (A1 + A2 + A3)) / 3
    assert pl.lambda2 == lam2
    assert cycle_to_orbit(2, 4, pl.runner_up) == PeriodicOrbit(2, (0, 0, 1))
    assert pl.beta_tilde == -EPS4 * A4
    assert pl.locked and pl.margin0 == pl.beta_tilde - lam2
    # census finished: exactly the runner-up and the long zero-run orbit
    assert pl.tie_complete is True
    means = sorted(mu for mu, _ in pl.tie_cycles)
    other = -(2 * DELTA + EPS4 * (2 * A1 + A2 + A3)) / 4
    assert means == [other, lam2]
    orbs = {cycle_to_orbit(2, 4, cyc) for _, cyc in pl.tie_cycles}
    assert orbs == {PeriodicOrbit(2, (0, 0, 1)), PeriodicOrbit(2, (0, 0, 0, 1))}


def test_offcycle_gap_brute_force(tie_plan):
    pl = tie_plan
    V, E = 8, 16
    adj = {}
    for e in range(E):
        adj.setdefault(e // 2, []).append((e, e % 8))
    cycles, truncated = simple_cycles(adj, cap=4096)
    assert not truncated
    y = set(pl.model.y_edges)
    best = min(
        sum(FASTA.value(int(pl.model.c_table[e])) for e in cyc) / Fraction(len(cyc))
        for cyc in cycles
        if set(cyc) != y
    )
    assert offcycle_distance_gap(pl) == best


def test_tie_plan_zero_trial_margin_exact(tie_plan):
    tr = lockin_trial(tie_plan, zero_table(2, 4), "zero")
    assert tr.locked and tr.margin == tie_plan.margin0 and tr.competitor is None


def test_tie_plan_unlock_names_competitor(tie_plan):
    g = tie_plan.model.g_level_table(FASTA)
    h = g.scale(Fraction(1, 2**20))
    tr = lockin_trial(tie_plan, h, "beyond", max_norm=1)
    assert not tr.locked and tr.margin < 0
    assert tr.competitor == PeriodicOrbit(2, (0, 0, 0, 1))
    # the named competitor really beats Y; the global winner is the zero
    # loop (it collects t * A_1 every step), and the foundational lane
    # confirms Y lost the top spot
    ft = _materialize(tie_plan, h)
    assert ergodic_average(ft, tr.competitor) > ergodic_average(ft, tie_plan.Y)
    nf = normal_form(ft, FASTA)
    orbits, unique, _ = maximizing_support(nf)
    assert unique and orbits == [PeriodicOrbit(2, (0,))]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_trial_verdict_sound_against_direct_lane(tie_plan, seed):
    cap = tie_plan.eps * tie_plan.sigma
    h = sample_perturbation(2, 4, FASTA, cap / 2, seed)
    tr = lockin_trial(tie_plan, h)
    beta, direct = _direct_verdict(tie_plan, h)
    if tr.locked:
        assert direct
        assert beta == tie_plan.beta_tilde + h.sum_over(tie_plan.model.y_edges) / 2


# --- exact trials on the toy plan -------------------------------------------------


def test_zero_trial(toy_plan):
    tr = lockin_trial(toy_plan, zero_table(2, 7), "zero")
    assert tr.locked and tr.norm == 0 and tr.margin == toy_plan.margin0


def test_constant_shift_trial(toy_plan):
    # a constant shifts every cycle mean equally: margin must not move
    cap = toy_plan.eps * toy_plan.sigma
    h = Int64Table(2, 7, np.ones(128, dtype=np.int64), 6)
    assert h.sup_abs() == cap / 2
    tr = lockin_trial(toy_plan, h)
    assert tr.locked and tr.margin == toy_plan.margin0


def test_trial_guards(toy_plan):
    with pytest.raises(ValueError, match="depth-K"):
        lockin_trial(toy_plan, zero_table(2, 6))
    big = Int64Table(2, 7, np.ones(128, dtype=np.int64), 3)
    with pytest.raises(ValueError, match="radius"):
        lockin_trial(toy_plan, big)
    assert lockin_trial(toy_plan, big, max_norm=1).locked


def test_sample_perturbation_properties():
    b = Fraction(1, 2**6)
    seen = set()
    for seed in range(8):
        h = sample_perturbation(2, 7, FASTA, b, seed)
        n = h.a_norm(FASTA)
        assert b / 2 < n < b
        seen.add(n)
        again = sample_perturbation(2, 7, FASTA, b, seed)
        assert again.nums.tolist() == h.nums.tolist() and again.exp == h.exp
    assert len(seen) > 1
    with pytest.raises(ValueError):
        sample_perturbation(2, 7, FASTA, 0, 0)


def test_adversarial_trial(toy_plan):
    adv = adversarial_perturbation(toy_plan)
    cap = toy_plan.eps * toy_plan.sigma
    assert 0 < adv.a_norm(FASTA) < cap
    tr = lockin_trial(toy_plan, adv, "adversarial")
    assert tr.locked
    # cancelling part of eps helps every rival: strictly worse than zero
    assert tr.margin < toy_plan.margin0


def test_random_trials_match_direct_lane(toy_plan):
    cap = toy_plan.eps * toy_plan.sigma
    for seed in range(4):
        h = sample_perturbation(2, 7, FASTA, cap / 2, seed)
        tr = lockin_trial(toy_plan, h)
        assert tr.locked
        beta, direct = _direct_verdict(toy_plan, h)
        assert direct
        assert beta == toy_plan.beta_tilde + h.sum_over(toy_plan.model.y_edges) / 2


def test_unlock_matches_direct_lane(toy_plan):
    h = sample_perturbation(2, 7, FASTA, Fraction(2**255), 1)
    tr = lockin_trial(toy_plan, h, max_norm=Fraction(2**256))
    assert not tr.locked
    _, direct = _direct_verdict(toy_plan, h)
    assert not direct


def test_report_shape_and_determinism(toy_plan):
    rep = lockin_report(toy_plan, trials=6, seed=3)
    assert rep.all_locked and len(rep.trials) == 8
    assert [t.label for t in rep.trials[:2]] == ["zero", "adversarial"]
    assert rep.min_margin == min(t.margin for t in rep.trials) > 0
    rep2 = lockin_report(toy_plan, trials=6, seed=3)
    assert [(t.label, t.norm, t.margin) for t in rep.trials] == [
        (t.label, t.norm, t.margin) for t in rep2.trials
    ]
    rep3 = lockin_report(toy_plan, trials=6, seed=4)
    assert [t.margin for t in rep3.trials] != [t.margin for t in rep.trials]


def test_empirical_radius_bracket(toy_plan):
    lo, hi = empirical_lockin_radius(toy_plan, trials=4, seed=0, refine=5)
    assert 0 < lo < hi
    # far beyond the theorem radius: the constants are sufficient, not sharp
    assert lo > toy_plan.eps * toy_plan.sigma
    ok = lockin_report(toy_plan, 4, 0, bound=lo, include_adversarial=False)
    bad = lockin_report(toy_plan, 4, 0, bound=hi, include_adversarial=False)
    assert ok.all_locked and not bad.all_locked
    assert empirical_lockin_radius(toy_plan, trials=4, seed=0, refine=5) == (lo, hi)


# --- the degenerate eps = 0 plan --------------------------------------------------


def test_eps_zero_two_optimizers():
    pl = build_perturbation(constant(2, Fraction(2)), TRI, 0)
    assert not pl.locked and pl.margin0 == 0 and pl.mode == "empirical"
    rep = lockin_report(pl)
    assert not rep.all_locked and rep.min_margin == 0 and len(rep.trials) == 1
    with pytest.raises(ValueError):
        empirical_lockin_radius(pl)
    with pytest.raises(ValueError, match="locked"):
        backward_walk(pl, 5)


# --- shadowing gap ----------------------------------------------------------------


def test_shadow_gap_trivial(toy_plan):
    rep = shadow_gap_check(F10, TRI, Y01, Y01, 5)
    assert rep.holds and rep.measured == rep.upper == 1
    assert rep.lower == 1 - 20 * 6 * TRI.value(5) / 2
    assert rep.offsets == (0, 0) and rep.p == 2


def test_shadow_gap_nontrivial():
    f = CylinderFunction(2, 2, (0, 1, 1, 1))
    x = PeriodicOrbit(2, (0, 1, 1, 1))
    rep = shadow_gap_check(f, TRI, x, Y01, 2)
    assert rep.holds and rep.measured == rep.upper == 1
    assert rep.offsets == (3, 1)
    one = shadow_gap_check(f, TRI, x, PeriodicOrbit(2, (1,)), 3)
    assert one.holds and one.measured == 1


def test_shadow_gap_errors():
    with pytest.raises(ValueError, match="maximize"):
        shadow_gap_check(F10, TRI, PeriodicOrbit(2, (0,)), Y01, 1)
    with pytest.raises(ValueError, match="shadows"):
        shadow_gap_check(F10, TRI, Y01, PeriodicOrbit(2, (0,)), 2)
    with pytest.raises(ValueError):
        shadow_gap_check(F10, TRI, Y01, Y01, -1)


# --- backward walks ---------------------------------------------------------------


def test_walk_from_orbit(toy_plan):
    w = backward_walk(toy_plan, 12)
    assert w.symbols[:4] == (1, 0, 1, 0)
    assert w.excursion_times == () and w.segment_sums == ()
    assert w.budget == int(2 * w.hstar_sup / toy_plan.alpha)
    assert w.within_budget and w.alpha_ok


def test_walk_far_starts(toy_plan):
    for z in (periodic_point(2, (1,)), periodic_point(2, (1, 1, 1, 0))):
        w = backward_walk(toy_plan, 10, z=z)
        # one far state at the start, then the greedy climbs home and stays
        assert w.excursion_times == (0,) and w.segment_sums == ()
        assert w.symbols[-2:] in {(0, 1), (1, 0)}
        assert w.within_budget and w.alpha_ok


def test_walk_zero_q(toy_plan):
    w = backward_walk(toy_plan, 8, q=constant(2, Fraction(0)))
    assert w.symbols == (0,) * 8
    assert w.excursion_times == tuple(range(1, 9))
    assert w.segment_sums == (Fraction(0),) * 7
    assert w.budget is None and w.within_budget is None and w.alpha_ok is None


def test_walk_custom_q_normal_form(toy_plan):
    q = CylinderFunction(2, 2, (-1, 0, 0, -1))
    w = backward_walk(toy_plan, 10, z=periodic_point(2, (0,)), q=q)
    assert w.excursion_times == (0,)
    assert w.symbols[-2:] in {(0, 1), (1, 0)}


def test_walk_q_guards(toy_plan):
    with pytest.raises(CertificateError):
        backward_walk(toy_plan, 5, q=CylinderFunction(2, 2, (1, 0, 0, 0)))
    deep = constant(2, Fraction(0), depth=9)
    with pytest.raises(ValueError, match="depth"):
        backward_walk(toy_plan, 5, q=deep)


def test_walk_needs_window_deeper_than_k():
    pl = build_perturbation(F10, FASTA, HALF, k=2, K=3)
    assert pl.locked
    with pytest.raises(ValueError, match="window"):
        backward_walk(pl, 5)
