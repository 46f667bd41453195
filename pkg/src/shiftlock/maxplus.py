"""Exact max-plus solver on de Bruijn graphs.

Depth-k cylinder functions become edge weights on the de Bruijn graph
(nodes = words of length k-1, edges = words of length k).  Invariant
measures correspond to cycles, so the maximum ergodic average is a
maximum cycle mean, computed exactly by Karp's recurrence.  The
sub-action h (fixed point of the one-step backward max operator) is the
column maximum of the Kleene star over critical columns, evaluated
sparsely as a longest-path computation from the critical nodes; the
fixed-point identity is re-verified on every output.

Integer encodings, used throughout the package:
  node u   <-> word of length k-1, big-endian base m
  edge e   <-> word of length k;  src(e) = e // m,  tgt(e) = e mod m^(k-1)
  in-edges of u are a*m^(k-1) + u for each symbol a.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .aseq import ASequence
from .cylinder import (
    CylinderFunction,
    a_norm,
    lift_depth,
    tail_variation,
)
from .shift import PeriodicOrbit, orbit_of, periodic_point


class CertificateError(RuntimeError):
    """An internal exact certificate failed; indicates a bug, never ignored."""


@dataclass(frozen=True)
class DeBruijnGraph:
    m: int
    order: int  # edge words have this length
    weights: tuple

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("graph order must be >= 1")
        if len(self.weights) != self.m**self.order:
            raise ValueError("need one weight per edge word")

    @property
    def node_count(self) -> int:
        return self.m ** (self.order - 1)

    @property
    def edge_count(self) -> int:
        return self.m**self.order

    def src(self, e: int) -> int:
        return e // self.m

    def tgt(self, e: int) -> int:
        return e % self.node_count

    def first_symbol(self, e: int) -> int:
        return e // self.node_count


def build_graph(f: CylinderFunction) -> DeBruijnGraph:
    """Edge-weighted de Bruijn graph of f (depth-0 constants lift to depth 1)."""
    if f.depth == 0:
        f = lift_depth(f, 1)
    return DeBruijnGraph(f.m, f.depth, f.table)


def karp_max_mean(G: DeBruijnGraph) -> Fraction:
    """Maximum cycle mean by Karp's recurrence (exact rationals).

    D[t][v] = best weight of a length-t walk from node 0 to v (None for
    unreachable); beta = max_v min_t (D[V][v] - D[t][v]) / (V - t).
    """
    V, m = G.node_count, G.m
    w = G.weights
    D = [[None] * V for _ in range(V + 1)]
    D[0][0] = Fraction(0)
    for t in range(V):
        cur, nxt = D[t], D[t + 1]
        for u in range(V):
            best = None
            for a in range(m):
                e = a * V + u
                prev = cur[G.src(e)]
                if prev is None:
                    continue
                cand = prev + w[e]
                if best is None or cand > best:
                    best = cand
            nxt[u] = best
    beta = None
    last = D[V]
    for v in range(V):
        if last[v] is None:
            continue
        inner = None
        for t in range(V):
            if D[t][v] is None:
                continue
            val = (last[v] - D[t][v]) / (V - t)
            if inner is None or val < inner:
                inner = val
        if inner is not None and (beta is None or inner > beta):
            beta = inner
    if beta is None:
        raise AssertionError("strongly connected graph must have a cycle")
    return beta


def _super_potential(G: DeBruijnGraph, beta: Fraction) -> list:
    """Monotone longest-path values U from the all-zero start on w - beta.

    Stabilizes within node_count passes because no cycle of w - beta has
    positive weight; tight edges (U[src] + w - beta = U[tgt]) then contain
    every maximum-mean cycle.
    """
    V, m = G.node_count, G.m
    U = [Fraction(0)] * V
    for _ in range(V + 1):
        changed = False
        for u in range(V):
            best = U[u]
            for a in range(m):
                e = a * V + u
                cand = U[G.src(e)] + G.weights[e] - beta
                if cand > best:
                    best = cand
            if best != U[u]:
                U[u] = best
                changed = True
        if not changed:
            return U
    raise CertificateError("potential failed to stabilize; beta is not the max mean")


def _tarjan_scc(nodes: list, adj: dict) -> dict:
    """Iterative Tarjan; returns node -> component id."""
    index = {}
    low = {}
    comp = {}
    stack, on_stack = [], set()
    counter = 0
    ncomp = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(adj.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[v] = min(low[v], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                while True:
                    u = stack.pop()
                    on_stack.discard(u)
                    comp[u] = ncomp
                    if u == v:
                        break
                ncomp += 1
    return comp


def critical_subgraph(G: DeBruijnGraph, beta: Fraction) -> tuple[set, set]:
    """(nodes, edges) lying on some cycle of mean exactly beta.

    Tight edges of a super-potential contain all such cycles; an edge is
    on one iff both endpoints share a strongly connected component of the
    tight subgraph.
    """
    V, m = G.node_count, G.m
    U = _super_potential(G, beta)
    tight = [
        e
        for e in range(G.edge_count)
        if U[G.src(e)] + G.weights[e] - beta == U[G.tgt(e)]
    ]
    adj = {}
    for e in tight:
        adj.setdefault(G.src(e), []).append(G.tgt(e))
    nodes = sorted({G.src(e) for e in tight} | {G.tgt(e) for e in tight})
    comp = _tarjan_scc(nodes, adj)
    edges = {e for e in tight if comp[G.src(e)] == comp[G.tgt(e)]}
    # a single tight node in its own component is critical only via a self-loop
    keep_nodes = {G.src(e) for e in edges} | {G.tgt(e) for e in edges}
    return keep_nodes, edges


def simple_cycles(out_adj: dict, cap: int = 512) -> tuple[list, bool]:
    """Simple cycles of a small digraph as edge lists; (cycles, truncated).

    out_adj maps node -> list of (edge_id, target).  Enumerates cycles
    whose smallest node is the DFS root, so each cycle appears once.
    """
    cycles = []
    nodes = sorted(out_adj)
    for s in nodes:
        # DFS over nodes >= s, closing back at s
        stack = [(s, iter(out_adj.get(s, ())))]
        path_edges = []
        on_path = {s}
        while stack:
            v, it = stack[-1]
            advanced = False
            for eid, t in it:
                if t == s:
                    cycles.append(path_edges + [eid])
                    if len(cycles) >= cap:
                        return cycles, True
                elif t > s and t not in on_path:
                    path_edges.append(eid)
                    on_path.add(t)
                    stack.append((t, iter(out_adj.get(t, ()))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if path_edges:
                    path_edges.pop()
                on_path.discard(v)
    return cycles, False


def cycle_orbit(G: DeBruijnGraph, cycle_edges: list) -> PeriodicOrbit:
    """Periodic orbit spelled by a simple cycle (first symbols of its edges)."""
    word = tuple(G.first_symbol(e) for e in cycle_edges)
    return orbit_of(periodic_point(G.m, word))


def cycle_mean(G: DeBruijnGraph, cycle_edges: list) -> Fraction:
    return sum((G.weights[e] for e in cycle_edges), Fraction(0)) / len(cycle_edges)


@dataclass(frozen=True)
class MaxMeanResult:
    beta: Fraction
    critical_cycles: tuple
    unique: bool
    cycles_truncated: bool = False


def _critical_out_adj(G: DeBruijnGraph, edges: set) -> dict:
    adj = {}
    for e in sorted(edges):
        adj.setdefault(G.src(e), []).append((e, G.tgt(e)))
    return adj


def _is_single_cycle(nodes: set, edges: set, G: DeBruijnGraph) -> bool:
    """Does the edge set form exactly one simple cycle covering it?"""
    if not edges or len(edges) != len(nodes):
        return False
    out = {}
    for e in edges:
        if G.src(e) in out:
            return False
        out[G.src(e)] = e
    start = next(iter(nodes))
    seen = 0
    u = start
    while True:
        if u not in out:
            return False
        u = G.tgt(out[u])
        seen += 1
        if u == start:
            break
        if seen > len(edges):
            return False
    return seen == len(edges)


def max_mean_cycle(G: DeBruijnGraph, cycle_cap: int = 512) -> MaxMeanResult:
    beta = karp_max_mean(G)
    nodes, edges = critical_subgraph(G, beta)
    unique = _is_single_cycle(nodes, edges, G)
    cycles, truncated = simple_cycles(_critical_out_adj(G, edges), cap=cycle_cap)
    orbits = []
    seen = set()
    for cyc in cycles:
        orb = cycle_orbit(G, cyc)
        if orb not in seen:
            seen.add(orb)
            orbits.append(orb)
    for cyc in cycles:
        if cycle_mean(G, cyc) != beta:
            raise CertificateError("critical cycle with wrong mean; solver bug")
    return MaxMeanResult(beta, tuple(orbits), unique, truncated)


def apply_phi(f: CylinderFunction, g: CylinderFunction) -> CylinderFunction:
    """One backward step: (Phi_f g)(w) = max_a [f(aw) + g((aw) first k-1)].

    f has depth k; g is lifted to depth k-1 if shallower; the result has
    depth k-1 (the node level of f's graph).
    """
    if f.m != g.m:
        raise ValueError("alphabet mismatch")
    if f.depth < 1:
        f = lift_depth(f, 1)
    k = f.depth
    if g.depth > k - 1:
        raise ValueError("g must have depth at most f.depth - 1")
    g = lift_depth(g, k - 1)
    m = f.m
    V = m ** (k - 1)
    Vg = m ** max(k - 2, 0)
    table = []
    for u in range(V):
        best = None
        for a in range(m):
            e = a * V + u
            gi = a * Vg + u // m if k >= 2 else 0
            cand = f.table[e] + g.table[gi]
            if best is None or cand > best:
                best = cand
        table.append(best)
    return CylinderFunction(m, k - 1, tuple(table))


@dataclass(frozen=True)
class SubAction:
    h: CylinderFunction
    beta: Fraction


def sub_action(f: CylinderFunction) -> SubAction:
    """Fixed point h of the backward max operator for f - beta.

    h(u) = best reduced weight of a path from a critical node to u, i.e.
    the entrywise max over critical columns of the Kleene star.  Exact;
    the identity apply_phi(f - beta, h) = h is verified before returning.
    """
    if f.depth == 0:
        f = lift_depth(f, 1)
    G = build_graph(f)
    beta = karp_max_mean(G)
    crit_nodes, _ = critical_subgraph(G, beta)
    V, m = G.node_count, G.m
    h = [Fraction(0) if u in crit_nodes else None for u in range(V)]
    for _ in range(V + 1):
        changed = False
        for u in range(V):
            best = h[u]
            for a in range(m):
                e = a * V + u
                base = h[G.src(e)]
                if base is None:
                    continue
                cand = base + G.weights[e] - beta
                if best is None or cand > best:
                    best = cand
            if best is not None and best != h[u]:
                h[u] = best
                changed = True
        if not changed:
            break
    else:
        raise CertificateError("sub-action iteration failed to stabilize")
    if any(v is None for v in h):
        raise CertificateError("graph not strongly connected from critical nodes")
    hf = CylinderFunction(f.m, f.depth - 1, tuple(h))
    shifted = f.add_constant(-beta)
    if apply_phi(shifted, hf).table != hf.table:
        raise CertificateError("computed h is not an exact fixed point")
    return SubAction(hf, beta)


@dataclass(frozen=True)
class NormalForm:
    f_hat: CylinderFunction
    h: SubAction
    beta: Fraction
    certificates: tuple  # ((name, bool), ...) all required True


def normal_form(f: CylinderFunction, A: ASequence) -> NormalForm:
    """Cohomologous representative f - beta + h - h(T .) <= 0, certified.

    Certifies nonpositivity plus the norm bounds ||f_hat||_A <= gamma *
    ||f||_A and V_n(f_hat) <= gamma * ||f||_A * A_n for n <= depth, with
    gamma the norm inflation factor of A.  Failures raise: each bound is
    a theorem for an exact fixed point, so a violation is a solver bug.
    """
    if f.depth == 0:
        f = lift_depth(f, 1)
    sa = sub_action(f)
    h, beta = sa.h, sa.beta
    G = build_graph(f)
    V = G.node_count
    table = tuple(
        G.weights[e] - beta + h.table[G.src(e)] - h.table[G.tgt(e)]
        for e in range(G.edge_count)
    )
    f_hat = CylinderFunction(f.m, f.depth, table)
    gamma = A.norm_inflation()
    bound = gamma * a_norm(f, A)
    checks = [
        ("nonpositive", max(table) <= 0),
        ("fixed_point", True),  # verified inside sub_action
        ("norm_bound", a_norm(f_hat, A) <= bound),
    ]
    for n in range(f.depth + 1):
        checks.append(
            (f"tail_bound_{n}", tail_variation(f_hat, n) <= bound * A.value(n))
        )
    bad = [name for name, ok in checks if not ok]
    if bad:
        raise CertificateError(f"normal form certificate failed: {bad}")
    return NormalForm(f_hat, sa, beta, tuple(checks))


def maximizing_support(nf: NormalForm, cycle_cap: int = 512):
    """All simple cycles of the zero subgraph of f_hat, plus a unique flag.

    Every maximizing measure lives on this subgraph, so unique = True
    (the cyclic part is one simple cycle) certifies a unique maximizing
    periodic orbit measure.
    """
    G = build_graph(nf.f_hat)
    zero_edges = [e for e in range(G.edge_count) if G.weights[e] == 0]
    adj = {}
    for e in zero_edges:
        adj.setdefault(G.src(e), []).append(G.tgt(e))
    comp = _tarjan_scc(sorted(adj), adj)
    cyclic = {
        e
        for e in zero_edges
        if G.tgt(e) in comp and comp.get(G.src(e)) == comp[G.tgt(e)]
    }
    nodes = {G.src(e) for e in cyclic} | {G.tgt(e) for e in cyclic}
    unique = _is_single_cycle(nodes, cyclic, G)
    cycles, truncated = simple_cycles(_critical_out_adj(G, cyclic), cap=cycle_cap)
    orbits = []
    seen = set()
    for cyc in cycles:
        orb = cycle_orbit(G, cyc)
        if orb not in seen:
            seen.add(orb)
            orbits.append(orb)
    return orbits, unique, truncated


def lyndon_words(m: int, maxlen: int) -> Iterator[tuple]:
    """All Lyndon words over 0..m-1 of length <= maxlen (Duval's algorithm)."""
    t = [0]
    while True:
        yield tuple(t)
        t = [t[i % len(t)] for i in range(maxlen)]
        while t and t[-1] == m - 1:
            t.pop()
        if not t:
            return
        t[-1] += 1


def oracle_max(
    f: CylinderFunction, max_period: int, orbit_cap: int = 64
) -> tuple[Fraction, list, bool]:
    """Brute-force max ergodic average over primitive necklaces of period <= P.

    Independent of the graph solver: enumerates Lyndon words and averages
    f over each cyclic orbit directly.  Returns (value, best orbits,
    orbit list truncated flag).  Guarded: m^P must stay enumerable.
    """
    if max_period < 1:
        raise ValueError("max period must be >= 1")
    if f.m**max_period > 10**7:
        raise ValueError("enumeration guard exceeded: m^P > 10^7")
    k = max(f.depth, 1)
    best: Optional[Fraction] = None
    best_orbits: list = []
    truncated = False
    for w in lyndon_words(f.m, max_period):
        n = len(w)
        total = Fraction(0)
        for i in range(n):
            idx = 0
            for t in range(k):
                idx = idx * f.m + w[(i + t) % n]
            total += f.table[idx] if f.depth else f.table[0]
        mean = total / n
        if best is None or mean > best:
            best = mean
            best_orbits = [PeriodicOrbit(f.m, w)]
            truncated = False
        elif mean == best:
            if len(best_orbits) < orbit_cap:
                best_orbits.append(PeriodicOrbit(f.m, w))
            else:
                truncated = True
    assert best is not None
    return best, best_orbits, truncated
