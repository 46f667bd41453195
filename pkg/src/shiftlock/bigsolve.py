"""Certified max-mean solving over scaled integer edge weights.

Each solve runs in two stages.  A float64 value iteration proposes a
candidate cycle; its exact mean lambda is then put to monotone integer
passes on the reduced weights r = w - lambda.  Those passes either
stabilize — proving U[tgt] >= U[src] + r(e) on every allowed edge, hence
every cycle mean <= lambda — or keep improving, in which case a cycle of
mean > lambda is extracted from the predecessor graph and lambda is
raised to it.  Floats only steer; every accepted number is integer-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .kernels import float_value_iteration, limb_pass, slack_mask
from .maxplus import CertificateError, simple_cycles
from .packed import limbs_for_bits, pack_array, pack_int, unpack_row

_RAISE_CAP = 16
_EXTRACT_EVERY = 24


class EnumerationOverflow(CertificateError):
    """A cycle/edge census blew its cap; results so far are incomplete,
    not wrong, so callers may degrade to coarser bounds."""


def _reduced_weights(model, lam: Fraction):
    """Common denominator D and integers r_c = (w_c/Q - lam) * D per combo."""
    D = lcm(model.Q, lam.denominator)
    mQ = D // model.Q
    a = lam.numerator * (D // lam.denominator)
    return D, [w * mQ - a for w in model.combo_w]


def _limb_count(V: int, r) -> int:
    Br = max(abs(x) for x in r) + 1
    return limbs_for_bits(((3 * V + 4) * Br).bit_length() + 6)


def _extract_cycle(pred, m: int, start: int, V: int):
    """Walk predecessor edges backward from start until a node repeats."""
    pos: dict = {}
    path: list = []
    u = start
    while True:
        if u in pos:
            return list(reversed(path[pos[u] :]))
        e = int(pred[u])
        if e < 0 or len(path) > V + 1:
            return None
        pos[u] = len(path)
        path.append(e)
        u = e // m


@dataclass(frozen=True)
class CertifiedMean:
    """Exact max cycle mean with a witness cycle and stabilized potential."""

    lam: Fraction
    cycle: tuple
    denom: int
    U: object
    passes: int


def certified_max_mean(
    model,
    forbid=frozenset(),
    vi_iters: int = 192,
    pass_cap: int = 900,
    backend=None,
) -> CertifiedMean:
    V = model.node_count
    m = model.m
    forbid = frozenset(int(e) for e in forbid)

    wf_combo = np.array([float(Fraction(w, model.Q)) for w in model.combo_w])
    wf = wf_combo[model.combo_id]
    for e in forbid:
        wf[e] = -np.inf
    Uf, pred_f = float_value_iteration(wf, V, m, vi_iters, backend=backend)

    cand = None
    for s in np.argsort(Uf)[::-1][:8]:
        cyc = _extract_cycle(pred_f, m, int(s), V)
        if cyc and not (set(cyc) & forbid):
            cand = cyc
            break
    if cand is None:
        raise CertificateError("float stage produced no admissible cycle")
    lam = model.cycle_mean(cand)
    cycle = tuple(cand)

    # integer floor of the float potential seeds the monotone passes;
    # any seed is sound, a good one just stabilizes sooner
    Uf_floor = np.floor(np.maximum(Uf, -3.0 * V - 4.0)).astype(np.int64)

    total = 0
    for _ in range(_RAISE_CAP):
        D, r = _reduced_weights(model, lam)
        L = _limb_count(V, r)
        rW = pack_array(r, L)
        U = pack_array([int(t) * D for t in Uf_floor], L)
        pred = np.full(V, -1, dtype=np.int64)
        improved = None
        for it in range(pass_cap):
            before = U.copy() if (it + 1) % _EXTRACT_EVERY == 0 else None
            ch = limb_pass(U, rW, model.combo_id, V, m, pred, forbid, backend=backend)
            total += 1
            if ch == 0:
                return CertifiedMean(lam, cycle, D, U, total)
            if before is None:
                continue
            moved = np.nonzero(np.any(U != before, axis=1))[0]
            for s in moved[:4]:
                cyc = _extract_cycle(pred, m, int(s), V)
                if cyc and not (set(cyc) & forbid):
                    mu = model.cycle_mean(cyc)
                    if mu > lam:
                        improved = (mu, tuple(cyc))
                        break
            if improved:
                break
        if improved is None:
            raise CertificateError("potential iteration exceeded its pass budget")
        lam, cycle = improved
    raise CertificateError("exceeded the level-raise budget")


def zero_potential_certificate(model, beta_tilde: Fraction):
    """Try to certify max mean = beta_tilde with the zero potential.

    Succeeds iff every combo weight satisfies w/Q <= beta_tilde with
    equality exactly on the orbit cycle's edges.  Returns None on
    success, else a reason string (caller falls back to the full solver).
    """
    bt = Fraction(beta_tilde)
    if model.Q % bt.denominator != 0:
        return "level is off the weight lattice"
    a = bt.numerator * (model.Q // bt.denominator)
    r = [w - a for w in model.combo_w]
    if max(r) > 0:
        return "a reduced weight is positive"
    tight = np.array([x == 0 for x in r])
    edges = np.nonzero(tight[model.combo_id])[0]
    if tuple(int(e) for e in edges) != tuple(model.y_edges):
        return "tight edges are not exactly the orbit cycle"
    return None


def lambda_second(model, y_edges, **kw):
    """Best mean among simple cycles other than the orbit cycle.

    A simple cycle differing from the orbit one must miss at least one
    of its edges, so the max over single-edge deletion solves is exact.
    """
    best = None
    wit = None
    for e in y_edges:
        res = certified_max_mean(model, forbid={int(e)}, **kw)
        if best is None or res.lam > best:
            best, wit = res.lam, res.cycle
    return best, wit


def near_tie_cycles(
    model,
    U,
    denom: int,
    lam_top: Fraction,
    lam2: Fraction,
    W: Fraction,
    y_edges,
    edge_cap: int = 40000,
    cycle_cap: int = 512,
):
    """All simple cycles (other than the orbit) of mean >= lam2 - W.

    Every edge of such a cycle has reduced slack >= -V*(lam_top-lam2+W)
    against the stabilized potential, so a single thresholded pass cuts
    the graph down to a small subgraph before cycle enumeration.
    """
    V = model.node_count
    m = model.m
    D, r = _reduced_weights(model, lam_top)
    if D != denom:
        raise CertificateError("potential lattice mismatch")
    q = Fraction(V) * (lam_top - lam2 + W) * D
    theta = -((-q.numerator) // q.denominator)
    L = U.shape[1]
    rW = pack_array([x + theta for x in r], L)
    mask = slack_mask(U, rW, model.combo_id, V, m, ())
    edges = [int(e) for e in np.nonzero(mask)[0]]
    if len(edges) > edge_cap:
        raise EnumerationOverflow(f"near-tie subgraph too large ({len(edges)} edges)")

    while True:  # peel edges that cannot lie on a cycle
        srcs = {e // m for e in edges}
        tgts = {e % V for e in edges}
        kept = [e for e in edges if (e % V) in srcs and (e // m) in tgts]
        if len(kept) == len(edges):
            break
        edges = kept

    out_adj: dict = {}
    for e in edges:
        out_adj.setdefault(e // m, []).append((e, e % V))
    cycles, truncated = simple_cycles(out_adj, cap=cycle_cap)
    if truncated:
        raise EnumerationOverflow("near-tie cycle enumeration truncated")

    y_set = set(int(e) for e in y_edges)
    found_orbit = False
    ties = []
    lo = lam2 - W
    for cyc in cycles:
        if set(cyc) == y_set:
            found_orbit = True
            continue
        mu = model.cycle_mean(cyc)
        if mu > lam2:
            raise CertificateError("cycle above the certified second level")
        if mu >= lo:
            ties.append((mu, tuple(cyc)))
    if not found_orbit:
        raise CertificateError("stabilized potential lost the orbit cycle")
    ties.sort(key=lambda t: (-t[0], t[1]))
    return ties


def source_potential(model, sources, lam: Fraction, pass_cap: int = 4096, backend=None):
    """Exact longest-path potential from source nodes under r = w - lam.

    Returns (U, D): U[u] decodes to D * max over paths source->u of the
    reduced weight (every node is reachable on a full shift).  Requires
    no cycle of positive reduced mean, else raises.
    """
    V = model.node_count
    m = model.m
    D, r = _reduced_weights(model, lam)
    L = _limb_count(V, r)
    rW = pack_array(r, L)
    Br = max(abs(x) for x in r) + 1
    C = (2 * V + 2) * Br
    U = np.empty((V, L), dtype=np.uint64)
    U[:] = np.array(pack_int(-C, L), dtype=np.uint64)
    zero = np.array(pack_int(0, L), dtype=np.uint64)
    for u in sources:
        U[int(u)] = zero
    pred = np.full(V, -1, dtype=np.int64)
    for _ in range(pass_cap):
        if limb_pass(U, rW, model.combo_id, V, m, pred, (), backend=backend) == 0:
            return U, D
    raise CertificateError("source potential failed to stabilize")


def potential_value(U, u: int) -> int:
    """Decode one node's packed potential to a plain integer."""
    return unpack_row(U[int(u)])
