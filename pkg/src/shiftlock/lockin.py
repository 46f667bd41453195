"""Locking a chosen periodic orbit in as the unique maximizer.

Given f with normal form f_hat <= 0 and a maximizing point x, subtract
eps times the truncated distance profile to the orbit Y spelled by x's
first depth-k recurrence:

    f_tilde = f_hat - eps * A_c(.)   (c = agreement depth with Y, cap K)

For eps, k in the right regime this makes Y the unique maximizing orbit,
and stays so under any perturbation h with ||h||_A < eps * sigma.  This
module computes the regime constants, builds the perturbation at an
exact integer scale, certifies the lock via the big-graph solvers, and
stress-tests the stability radius with exact trial arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .aseq import ASequence
from .bigsolve import (
    EnumerationOverflow,
    _limb_count,
    _reduced_weights,
    certified_max_mean,
    lambda_second,
    near_tie_cycles,
    potential_value,
    source_potential,
    zero_potential_certificate,
)
from .cylinder import CylinderFunction, a_norm, constant, ergodic_average, lift_depth
from .maxplus import (
    CertificateError,
    build_graph,
    max_mean_cycle,
    maximizing_support,
    normal_form,
)
from .packed import (
    Int64Table,
    LevelTable,
    ScaledModel,
    build_c_table,
    dyadic_floor,
    zero_table,
)
from .shift import (
    Point,
    PeriodicOrbit,
    iterate,
    minimal_recurrence,
    orbit_of,
    periodic_point,
    periodic_point_from_recurrence,
)

EDGE_CAP = 10**7  # largest m^K the solvers will take on


@dataclass(frozen=True)
class LockinConstants:
    """Regime constants: norm inflation, mean-response bound, radius, gap."""

    gamma: Fraction
    lip_bound: Fraction  # gamma^2 * (||f||_A + 2)
    sigma: Fraction      # A_k / (4p): stability radius is eps * sigma
    alpha: Fraction      # (eps/2) A_k - 3 * lip_bound * A_{k+1}: excursion gap


def constants(f: CylinderFunction, A: ASequence, eps, k: int, p: int) -> LockinConstants:
    # eps = 0 is allowed so degenerate (unperturbed) plans can be built
    # and reported on; the admissible range for an actual lock is (0, 1).
    eps = Fraction(eps)
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if k < 1 or p < 1:
        raise ValueError("need k >= 1 and p >= 1")
    gamma = A.norm_inflation()
    lip = gamma**2 * (a_norm(f, A) + 2)
    sigma = A.value(k) / (4 * p)
    alpha = eps / 2 * A.value(k) - 3 * lip * A.value(k + 1)
    return LockinConstants(gamma, lip, sigma, alpha)


def choose_k(f: CylinderFunction, A: ASequence, eps, k_cap: int = 4096) -> int:
    """Smallest k >= 1 with (eps/2) A_k > 3 * lip_bound * A_{k+1}.

    Exists for every eps > 0 exactly when the consecutive ratios
    A_{k+1}/A_k tend to 0, so sequences that provably fail that (constant
    ratios, say) are refused up front instead of scanned forever.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if A.super_continuous() is False:
        raise ValueError("ratios A_{k+1}/A_k do not tend to 0 for this sequence")
    lip = A.norm_inflation() ** 2 * (a_norm(f, A) + 2)
    for k in range(1, k_cap):
        if eps / 2 * A.value(k) > 3 * lip * A.value(k + 1):
            return k
    raise ValueError(
        f"no admissible depth k below {k_cap}: ratio decay too slow "
        "or unknown; consider lacunarize()"
    )


@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    f: CylinderFunction
    A: ASequence
    eps: Fraction
    nf: object            # normal form of f
    x: Point              # maximizing base point
    k: int                # recurrence depth
    recurrence: tuple     # (i, j) from minimal_recurrence
    Y: PeriodicOrbit      # locked orbit (spelled by x[i:j))
    p: int                # its period
    gamma: Fraction
    lip_bound: Fraction
    sigma: Fraction
    alpha: Fraction
    K: int                # truncation depth of the distance profile
    mode: str             # "certified" (alpha > 0) or "empirical"
    model: ScaledModel
    beta_tilde: Fraction  # exact mean of f_tilde on Y
    lambda2: Fraction     # best mean among all other simple cycles
    runner_up: tuple      # a cycle attaining lambda2 (edge ints)
    margin0: Fraction     # beta_tilde - lambda2
    locked: bool          # margin0 > 0: Y uniquely maximizes f_tilde
    W: Fraction           # tie window 4 * eps * sigma
    tie_cycles: tuple     # ((mean, edges), ...) cycles with mean >= lambda2 - W
    tie_complete: bool    # whether tie_cycles really holds ALL of them
    certificate: str      # "zero-potential" or "iterated-potential"


def build_perturbation(
    f: CylinderFunction,
    A: ASequence,
    eps,
    k: int = None,
    K: int = None,
    x: Point = None,
    edge_cap: int = EDGE_CAP,
    cycle_cap: int = 512,
    backend=None,
) -> PerturbationPlan:
    """Construct and certify the orbit-locking perturbation of f.

    k and K default to the certified regime (k from choose_k, K just
    deep enough that A_K is negligible against the excursion gap).  A
    user-forced k with alpha <= 0 degrades the plan to empirical mode:
    everything is still computed exactly, there is just no a-priori
    radius theorem backing it.
    """
    eps = Fraction(eps)
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    if k is not None and k < 1:
        raise ValueError("need k >= 1")
    m = f.m
    nf = normal_form(f, A)

    if x is None:
        orbits, _, truncated = maximizing_support(nf)
        if truncated or not orbits:
            raise CertificateError("maximizing support enumeration failed")
        x = periodic_point(m, min(o.necklace for o in orbits))
    else:
        if x.m != m:
            raise ValueError("base point alphabet mismatch")
        tail = orbit_of(iterate(x, len(x.preperiod)))
        if ergodic_average(f, tail) != nf.beta:
            raise ValueError("base point does not maximize f")

    if k is None:
        k = choose_k(f, A, eps) if eps > 0 else 2
    horizon = len(x.preperiod) + 2 * max(1, len(x.period)) + k + 1
    i, j = minimal_recurrence(x, k, horizon)
    Y = periodic_point_from_recurrence(x, i, j)
    p = len(Y.necklace)

    cst = constants(f, A, eps, k, p)
    mode = "certified" if cst.alpha > 0 else "empirical"
    if K is None:
        K = k + 2 * p + 2
        if mode == "certified":
            K = max(K, A.first_below(cst.alpha / 100))
    if K < max(f.depth, p, 2):
        raise ValueError(f"depth K={K} too shallow for this plan")
    if m**K > edge_cap:
        raise ValueError(
            f"depth K={K} needs {m**K} edge words (cap {edge_cap}); "
            "pass a smaller K or raise edge_cap"
        )

    ct = build_c_table(m, K, Y)
    model = ScaledModel(nf.f_hat, A, eps, K, Y, ct)
    beta_tilde = model.cycle_mean(model.y_edges)
    V = model.node_count

    reason = zero_potential_certificate(model, beta_tilde)
    if reason is None:
        certificate = "zero-potential"
        lam_top = beta_tilde
        D, r = _reduced_weights(model, lam_top)
        U = np.zeros((V, _limb_count(V, r)), dtype=np.uint64)
    else:
        certificate = "iterated-potential"
        top = certified_max_mean(model, backend=backend)
        lam_top, U, D = top.lam, top.U, top.denom
        if lam_top < beta_tilde:
            raise CertificateError("solver certified below the orbit mean")

    lam2, runner = lambda_second(model, model.y_edges, backend=backend)
    margin0 = beta_tilde - lam2
    locked = margin0 > 0
    if locked and lam_top != beta_tilde:
        raise CertificateError("top solve disagrees with a positive margin")

    # The tie set sharpens trial margins but is not needed for soundness:
    # when the window is combinatorially dense (wide W against a coarse
    # mean lattice) enumeration is hopeless and trials fall back to the
    # global lambda2 bound instead.
    W = 4 * eps * cst.sigma
    try:
        ties = near_tie_cycles(model, U, D, lam_top, lam2, W, model.y_edges,
                               cycle_cap=cycle_cap)
        tie_complete = True
    except EnumerationOverflow:
        ties, tie_complete = (), False

    return PerturbationPlan(
        f=f, A=A, eps=eps, nf=nf, x=x, k=k, recurrence=(i, j), Y=Y, p=p,
        gamma=cst.gamma, lip_bound=cst.lip_bound, sigma=cst.sigma,
        alpha=cst.alpha, K=K, mode=mode, model=model,
        beta_tilde=beta_tilde, lambda2=lam2, runner_up=tuple(runner),
        margin0=margin0, locked=locked, W=W, tie_cycles=tuple(ties),
        tie_complete=tie_complete, certificate=certificate,
    )


def cycle_to_orbit(m: int, K: int, edges) -> PeriodicOrbit:
    """Periodic orbit spelled by a simple cycle's first symbols at depth K."""
    V = m ** (K - 1)
    return orbit_of(periodic_point(m, tuple(int(e) // V for e in edges)))


# --- exact trials ---------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    label: str
    norm: Fraction        # ||h||_A, exact
    sup: Fraction
    margin: Fraction      # min gap of Y's perturbed mean over all rivals
    locked: bool          # margin > 0; exact either way
    competitor: object    # beating orbit when one exists, else None


def lockin_trial(
    plan: PerturbationPlan, h, label: str = "trial", max_norm=None
) -> TrialResult:
    """Does Y still uniquely maximize f_tilde + h?  Decided exactly.

    h is an Int64Table or LevelTable at depth K with ||h||_A below the
    theorem radius eps*sigma (pass max_norm to probe beyond it).  Near
    ties get exact perturbed means; everything else is bounded through
    lambda2 (minus the tie window W when the tie census is complete), so
    a positive margin is always a proof and the margin value itself is
    exact whenever a near tie is the binding rival.
    """
    model = plan.model
    if h.m != model.m or h.depth != plan.K:
        raise ValueError("perturbation must be a depth-K table")
    norm = h.a_norm(plan.A)
    cap = plan.eps * plan.sigma if max_norm is None else Fraction(max_norm)
    if norm > 0 and norm >= cap:
        raise ValueError(f"||h||_A = {norm} outside the radius bound {cap}")
    sup = h.sup_abs()

    mu_y = plan.beta_tilde + h.sum_over(model.y_edges) / plan.p
    best = None
    best_cycle = None
    for mu, cyc in plan.tie_cycles:
        val = mu + h.sum_over(cyc) / len(cyc)
        if best is None or val > best:
            best, best_cycle = val, cyc
    floor = plan.lambda2 - plan.W if plan.tie_complete else plan.lambda2
    margin = mu_y - (floor + sup)
    if best is not None:
        margin = min(margin, mu_y - best)
    locked = margin > 0
    competitor = None
    if not locked and best is not None and mu_y - best <= 0:
        competitor = cycle_to_orbit(model.m, plan.K, best_cycle)
    return TrialResult(label, norm, sup, margin, locked, competitor)


def sample_perturbation(m: int, K: int, A: ASequence, bound, seed: int) -> Int64Table:
    """Random depth-K table with exact ||.||_A in (bound/2, bound).

    Draws int numerators, measures the exact norm, then rescales by a
    dyadic snap of bound * uniform(1/2, 1) / norm so the product stays
    in int64 range and the final norm is exactly representable.
    """
    bound = Fraction(bound)
    if bound <= 0:
        raise ValueError("sampling bound must be positive")
    rng = np.random.default_rng(seed)
    raw = rng.integers(-(1 << 16), (1 << 16) + 1, size=m**K).astype(np.int64)
    if not raw.any():
        raw[0] = 1
    base = Int64Table(m, K, raw, 16)
    u = Fraction(float(rng.uniform(0.5, 1.0)))
    rho = dyadic_floor(bound * u / base.a_norm(A), 40)
    s = rho.denominator.bit_length() - 1
    return Int64Table(m, K, raw * rho.numerator, 16 + s)


def adversarial_perturbation(plan: PerturbationPlan) -> LevelTable:
    """The worst direction at maximal allowed size: h = t * A_c(.).

    Adding a positive multiple of the distance profile cancels part of
    eps uniformly, which is exactly how a perturbation best helps every
    rival orbit at once.  None when eps = 0 (no budget to spend).
    """
    cap = plan.eps * plan.sigma
    if cap <= 0:
        return None
    g = plan.model.g_level_table(plan.A)
    t = dyadic_floor(cap * (1 - Fraction(1, 1 << 16)) / g.a_norm(plan.A), 48)
    return g.scale(t)


@dataclass(frozen=True)
class LockinReport:
    trials: tuple
    all_locked: bool
    min_margin: Fraction
    seed: int
    bound: Fraction


def lockin_report(
    plan: PerturbationPlan,
    trials: int = 24,
    seed: int = 0,
    bound=None,
    include_adversarial: bool = True,
) -> LockinReport:
    """Zero, adversarial, and `trials` random perturbations, all exact.

    Per-trial seeds are seed + index, so reports are reproducible
    byte-for-byte.  bound defaults to half the certified radius.
    """
    model = plan.model
    cap = plan.eps * plan.sigma
    if bound is None:
        bound = cap / 2
    bound = Fraction(bound)
    max_norm = max(cap, bound) if max(cap, bound) > 0 else None
    results = [lockin_trial(plan, zero_table(model.m, plan.K), "zero", max_norm)]
    adv = adversarial_perturbation(plan) if include_adversarial else None
    if adv is not None:
        results.append(lockin_trial(plan, adv, "adversarial", max_norm))
    if bound > 0:
        for t in range(trials):
            h = sample_perturbation(model.m, plan.K, plan.A, bound, seed + t)
            results.append(lockin_trial(plan, h, f"random-{t:04d}", max_norm))
    return LockinReport(
        tuple(results),
        all(r.locked for r in results),
        min(r.margin for r in results),
        seed,
        bound,
    )


def empirical_lockin_radius(
    plan: PerturbationPlan,
    trials: int = 24,
    seed: int = 0,
    refine: int = 12,
    growth_cap: int = 600,
):
    """Bracket the largest bound whose random trials all stay locked.

    Doubles up from a tiny fraction of the theorem radius eps*sigma --
    deliberately NOT stopping there, since the constants are sufficient
    rather than necessary -- then bisects.  Returns (lo, hi) with every
    trial provably locked at bound lo and some trial no longer provably
    locked at hi.
    """
    cap = plan.eps * plan.sigma
    if cap <= 0:
        raise ValueError("needs eps > 0")

    def ok(b):
        # the fixed-size adversarial trial would dominate every probe
        rep = lockin_report(plan, trials, seed, bound=b, include_adversarial=False)
        return rep.all_locked

    b = cap / 2**20
    if not ok(b):
        return Fraction(0), b
    lo = b
    for _ in range(growth_cap):
        b = b * 2
        if not ok(b):
            break
        lo = b
    else:
        raise RuntimeError("no unlocking bound within the growth cap")
    hi = b
    for _ in range(refine):
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def offcycle_distance_gap(plan: PerturbationPlan) -> Fraction:
    """min over simple cycles other than Y of their average A_c(.) value.

    Lower-bounds how much the subtracted profile costs every rival:
    margin0 >= eps * (this - A_K) is a consequence worth checking.
    """
    gm = ScaledModel(
        constant(plan.model.m, 0), plan.A, Fraction(1), plan.K, plan.Y,
        plan.model.c_table,
    )
    lam2g, _ = lambda_second(gm, gm.y_edges)
    return -lam2g


# --- how much optimality an orbit can lose by being shadowed ----------------------


@dataclass(frozen=True)
class ShadowGapReport:
    """Two-sided squeeze on the mean of a shadowing orbit.

    If a segment of the maximizing orbit x tracks y within 2^-r for one
    full period p, then y's mean sits within gamma*||f||_A*A_r/p of the
    optimum."""

    r: int
    p: int
    offsets: tuple        # (m, m2): T^(i+m) x tracks T^(i+m2) y for i < p
    lower: Fraction
    measured: Fraction
    upper: Fraction

    @property
    def holds(self) -> bool:
        return self.lower <= self.measured <= self.upper


def _shadow_offsets(x: PeriodicOrbit, y: PeriodicOrbit, r: int, p: int):
    # agreement of r + p - 1 consecutive symbols <=> every window of the
    # segment matches to depth r
    span = r + p - 1
    px, py = len(x.necklace), len(y.necklace)
    for m in range(px):
        xs = tuple(x.necklace[(m + t) % px] for t in range(span))
        for m2 in range(py):
            if xs == tuple(y.necklace[(m2 + t) % py] for t in range(span)):
                return m, m2
    return None


def shadow_gap_check(
    f: CylinderFunction, A: ASequence, x: PeriodicOrbit, y: PeriodicOrbit, r: int
) -> ShadowGapReport:
    """Certify f_bar(x) - gamma*||f||_A*A_r/p <= f_bar(y) <= f_bar(x).

    x must maximize f and a segment of its orbit must stay within 2^-r
    of y's for one full y-period; both are verified, not assumed.
    """
    if r < 0:
        raise ValueError("need r >= 0")
    g = build_graph(f if f.depth >= 1 else lift_depth(f, 1))
    top = max_mean_cycle(g).beta
    fx = ergodic_average(f, x)
    if fx != top:
        raise ValueError("x does not maximize f")
    p = len(y.necklace)
    off = _shadow_offsets(x, y, r, p)
    if off is None:
        raise ValueError(f"no segment of x shadows y to depth {r}")
    lower = fx - A.norm_inflation() * a_norm(f, A) * A.value(r) / p
    return ShadowGapReport(r, p, off, lower, ergodic_average(f, y), fx)


# --- backward orbits under the locked potential ----------------------------------


@dataclass(frozen=True)
class BackwardWalk:
    symbols: tuple          # prepended symbols a_1, a_2, ...
    excursion_times: tuple  # every t with d(omega_t, OY) > 2^-(k+1)
    segment_sums: tuple     # exact q-sum over (t_{i-1}, t_i], one per i >= 1
    hstar_sup: Fraction     # sup |h*| over nodes
    budget: int | None      # floor(2 * hstar_sup / alpha) on a certified plan
    within_budget: bool | None
    alpha_ok: bool | None   # every complete segment cost <= -alpha


def _arg_extreme(U, want_max: bool):
    V, L = U.shape
    sel = np.arange(V)
    for l in range(L - 1, -1, -1):
        col = U[sel, l]
        key = col.view(np.int64) if l == L - 1 else col
        target = key.max() if want_max else key.min()
        sel = sel[key == target]
    return int(sel[0])


# repeated walks on one plan reuse its potential; the model object is the
# key, so plans keep their solves alive and fresh models displace old ones
_WALK_SOLVES: list = []


def _walk_potential(model, lam, backend):
    for entry in _WALK_SOLVES:
        if entry[0] is model and entry[1] == lam and entry[2] == backend:
            return entry[3], entry[4]
    U, D = source_potential(model, model.y_nodes, lam, backend=backend)
    _WALK_SOLVES.append((model, lam, backend, U, D))
    del _WALK_SOLVES[:-2]
    return U, D


def backward_walk(
    plan: PerturbationPlan,
    steps: int,
    z: Point = None,
    q: CylinderFunction = None,
    backend=None,
) -> BackwardWalk:
    """Greedy backward orbit of the locked potential, with excursion audit.

    From z's depth-(K-1) window, repeatedly prepend the symbol maximizing
    h*(new node) + q(edge), ties to the smallest symbol, where q defaults
    to f_tilde - beta_tilde and h* is its exact backward potential.  The
    excursion times are the steps landing farther than 2^-(k+1) from Y;
    the walk charges each stretch between consecutive ones with its exact
    q-cost.  On a certified plan every such stretch costs at most -alpha,
    so a bounded potential allows only finitely many: at most
    2*sup|h*|/alpha ever, no matter how long the walk runs.

    A custom q must put its maximum mean on Y (the potential solve
    refuses otherwise); pass its normalized version, mean zero on Y.
    """
    if not plan.locked:
        raise ValueError("backward walks need a locked plan")
    m, K = plan.model.m, plan.K
    if K - 1 < plan.k + 1:
        raise ValueError("node window too short to read off closeness to Y")
    if z is None:
        z = plan.x
    if q is None:
        model, lam = plan.model, plan.beta_tilde
        audited = plan.mode == "certified"
    else:
        if q.m != m or q.depth > K:
            raise ValueError("q must live on the same shift at depth <= K")
        model = ScaledModel(q, plan.A, Fraction(0), K, plan.Y, plan.model.c_table)
        lam = model.cycle_mean(model.y_edges)
        audited = False
    V = model.node_count
    U, D = _walk_potential(model, lam, backend)
    _, r = _reduced_weights(model, lam)

    hi = potential_value(U, _arg_extreme(U, True))
    lo = potential_value(U, _arg_extreme(U, False))
    hstar_sup = Fraction(max(abs(hi), abs(lo)), D)

    prefixes = {
        tuple(pt.symbol(t) for t in range(plan.k + 1)) for pt in plan.Y.points()
    }
    word = tuple(z.symbol(t) for t in range(K - 1))
    u = 0
    for a in word:
        u = u * m + a
    cache = {u: potential_value(U, u)}

    symbols = []
    edge_r = [0]  # 1-based step indexing: edge_r[t] is the cost into omega_t
    times = [] if word[: plan.k + 1] in prefixes else [0]
    for t in range(1, steps + 1):
        best = None
        for a in range(m):
            nu = a * (V // m) + u // m
            if nu not in cache:
                cache[nu] = potential_value(U, nu)
            score = cache[nu] + r[int(model.combo_id[a * V + u])]
            if best is None or score > best[0]:
                best = (score, a, nu)
        _, a, nu = best
        symbols.append(a)
        edge_r.append(r[int(model.combo_id[a * V + u])])
        word = (a,) + word[: K - 2]
        u = nu
        if word[: plan.k + 1] not in prefixes:
            times.append(t)

    sums = tuple(
        Fraction(sum(edge_r[times[i - 1] + 1 : times[i] + 1]), D)
        for i in range(1, len(times))
    )

    if audited and plan.alpha > 0:
        budget = int((2 * hstar_sup) / plan.alpha)
        within = len(sums) <= budget
        alpha_ok = all(s <= -plan.alpha for s in sums)
    else:
        budget = within = alpha_ok = None
    return BackwardWalk(
        tuple(symbols), tuple(times), sums, hstar_sup, budget, within, alpha_ok
    )
