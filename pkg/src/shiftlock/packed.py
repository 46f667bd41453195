"""Integer-lattice tables for deep truncation depths.

At theorem-grade constants the perturbation lives on a lattice like
1/2^232 while the base function has entries of order 1: floats are ~180
bits short and per-entry Fractions over millions of edge words are far
too slow.  Everything here is therefore held as integers on a common
denominator — numpy int64 when the numerators fit, little-endian
multi-limb uint64 rows (two's complement) when they do not — and every
quantity that leaves this module is an exact Fraction.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

import numpy as np

from .aseq import ASequence
from .cylinder import CylinderFunction
from .shift import PeriodicOrbit

MASK64 = (1 << 64) - 1

DIRECT_TABLE_LIMIT = 4096  # largest m^K for materializing plain CylinderFunctions


# --- multi-limb packing -----------------------------------------------------

def limbs_for_bits(bits: int) -> int:
    # one extra bit for the sign
    return max(1, -(-(bits + 1) // 64))


def pack_int(x: int, L: int) -> tuple:
    x &= (1 << (64 * L)) - 1
    return tuple((x >> (64 * l)) & MASK64 for l in range(L))


def unpack_row(row) -> int:
    L = len(row)
    v = 0
    for l in range(L):
        v |= int(row[l]) << (64 * l)
    if v >= 1 << (64 * L - 1):
        v -= 1 << (64 * L)
    return v


def pack_array(values, L: int) -> np.ndarray:
    out = np.empty((len(values), L), dtype=np.uint64)
    for i, x in enumerate(values):
        x &= (1 << (64 * L)) - 1
        for l in range(L):
            out[i, l] = (x >> (64 * l)) & MASK64
    return out


# --- dyadic snapping ---------------------------------------------------------

def dyadic_floor(x: Fraction, sig_bits: int) -> Fraction:
    """Largest dyadic rational <= x whose numerator has at most sig_bits bits."""
    if x <= 0:
        raise ValueError("dyadic_floor wants a positive value")
    p, q = x.numerator, x.denominator
    # shift so floor(x * 2^s) carries sig_bits significant bits
    s = sig_bits - (p.bit_length() - q.bit_length())
    while (p << s if s >= 0 else p >> -s) // q >= 1 << sig_bits:
        s -= 1
    while ((p << (s + 1) if s + 1 >= 0 else p >> -(s + 1))) // q < 1 << (sig_bits - 1):
        s += 1
    n = (p << s) // q if s >= 0 else p // (q << -s)
    return Fraction(n, 1) / Fraction(2) ** s


# --- orbit geometry at depth K ----------------------------------------------

def build_c_table(m: int, K: int, Y: PeriodicOrbit) -> np.ndarray:
    """c(w) = longest common prefix (capped at K) of each length-K word with Y.

    Returned as uint8 over all m^K words in lexicographic order; this is
    the combinatorial core of the truncated distance d_A(., Y) ~ A_c(w).
    """
    if K > 255:
        raise ValueError("depth too large for uint8 agreement table")
    size = m**K
    c = np.zeros(size, dtype=np.uint8)
    idx = np.arange(size, dtype=np.int64)
    for q in Y.points():
        alive = np.ones(size, dtype=bool)
        run = np.zeros(size, dtype=np.uint8)
        for t in range(K):
            digit = (idx // m ** (K - 1 - t)) % m
            alive &= digit == q.symbol(t)
            if not alive.any():
                break
            run[alive] += 1
        np.maximum(c, run, out=c)
    return c


def orbit_edge_ints(m: int, K: int, Y: PeriodicOrbit) -> tuple:
    """The p depth-K windows of the periodic stream of Y, as edge integers."""
    w = Y.necklace
    p = len(w)
    edges = []
    for s in range(p):
        e = 0
        for t in range(K):
            e = e * m + w[(s + t) % p]
        edges.append(e)
    return tuple(sorted(edges))


def orbit_node_ints(m: int, K: int, Y: PeriodicOrbit) -> tuple:
    """Depth-(K-1) windows of the stream of Y (the nodes its cycle visits)."""
    w = Y.necklace
    p = len(w)
    nodes = []
    for s in range(p):
        u = 0
        for t in range(K - 1):
            u = u * m + w[(s + t) % p]
        nodes.append(u)
    return tuple(sorted(set(nodes)))


# --- exact numpy-backed tables ------------------------------------------------

class Int64Table:
    """Depth-K table with entries nums[i] / 2^exp, numerators in int64 range."""

    kind = "int64"

    def __init__(self, m: int, depth: int, nums: np.ndarray, exp: int):
        if nums.shape != (m**depth,):
            raise ValueError("need one numerator per word")
        if nums.dtype != np.int64:
            raise ValueError("numerators must be int64")
        self.m = m
        self.depth = depth
        self.nums = nums
        self.exp = exp

    def value(self, i: int) -> Fraction:
        return Fraction(int(self.nums[i]), 1 << self.exp)

    def sup_abs(self) -> Fraction:
        if not len(self.nums):
            return Fraction(0)
        hi = max(int(self.nums.max()), -int(self.nums.min()))
        return Fraction(hi, 1 << self.exp)

    def sum_over(self, edge_ids) -> Fraction:
        total = sum(int(self.nums[e]) for e in edge_ids)
        return Fraction(total, 1 << self.exp)

    def variations_int(self) -> list:
        """var_j numerators for j = 0..depth (exact int64 tree reduction)."""
        m = self.m
        maxs = self.nums.copy()
        mins = self.nums.copy()
        out = [0] * (self.depth + 1)
        for j in range(self.depth - 1, -1, -1):
            maxs = maxs.reshape(-1, m).max(axis=1)
            mins = mins.reshape(-1, m).min(axis=1)
            out[j] = int((maxs - mins).max()) if len(maxs) else 0
        return out

    def a_norm(self, A: ASequence) -> Fraction:
        den = Fraction(1, 1 << self.exp)
        vars_int = self.variations_int()
        lip = Fraction(0)
        for j in range(self.depth):
            lip = max(lip, vars_int[j] * den / A.value(j))
        return lip + self.sup_abs()

    def to_cylinder(self) -> CylinderFunction:
        if len(self.nums) > DIRECT_TABLE_LIMIT:
            raise ValueError("table too large to materialize as Fractions")
        den = 1 << self.exp
        return CylinderFunction(
            self.m, self.depth, tuple(Fraction(int(v), den) for v in self.nums)
        )


class LevelTable:
    """Depth-K table taking few distinct values: entry i is values[levels[i]].

    values must be strictly decreasing (the only case the package needs:
    distance-profile tables like A_c(w) and their scalings), which lets
    block extrema reduce over the small uint8 level array.
    """

    kind = "level"

    def __init__(self, m: int, depth: int, levels: np.ndarray, values: tuple):
        if levels.shape != (m**depth,):
            raise ValueError("need one level per word")
        if levels.dtype != np.uint8:
            raise ValueError("levels must be uint8")
        vals = tuple(Fraction(v) for v in values)
        if any(a <= b for a, b in zip(vals, vals[1:])):
            raise ValueError("values must be strictly decreasing")
        if len(vals) and int(levels.max()) >= len(vals):
            raise ValueError("level out of range")
        self.m = m
        self.depth = depth
        self.levels = levels
        self.values = vals

    def value(self, i: int) -> Fraction:
        return self.values[int(self.levels[i])]

    def sup_abs(self) -> Fraction:
        lo = int(self.levels.min())
        hi = int(self.levels.max())
        return max(abs(self.values[lo]), abs(self.values[hi]))

    def sum_over(self, edge_ids) -> Fraction:
        counts = {}
        for e in edge_ids:
            lv = int(self.levels[e])
            counts[lv] = counts.get(lv, 0) + 1
        return sum((self.values[lv] * c for lv, c in counts.items()), Fraction(0))

    def a_norm(self, A: ASequence) -> Fraction:
        m = self.m
        # decreasing values: block max comes from the min level and vice versa
        minlev = self.levels.copy()
        maxlev = self.levels.copy()
        lip = Fraction(0)
        width = len(self.values) + 1
        for j in range(self.depth - 1, -1, -1):
            minlev = minlev.reshape(-1, m).min(axis=1)
            maxlev = maxlev.reshape(-1, m).max(axis=1)
            pairs = np.unique(
                minlev.astype(np.int32) * width + maxlev.astype(np.int32)
            )
            var_j = Fraction(0)
            for p in pairs:
                lo, hi = int(p) // width, int(p) % width
                var_j = max(var_j, self.values[lo] - self.values[hi])
            lip = max(lip, var_j / A.value(j))
        return lip + self.sup_abs()

    def scale(self, c: Fraction) -> "LevelTable":
        c = Fraction(c)
        if c <= 0:
            raise ValueError("scaling a level table requires a positive factor")
        return LevelTable(
            self.m, self.depth, self.levels, tuple(v * c for v in self.values)
        )

    def to_cylinder(self) -> CylinderFunction:
        if len(self.levels) > DIRECT_TABLE_LIMIT:
            raise ValueError("table too large to materialize as Fractions")
        return CylinderFunction(
            self.m, self.depth, tuple(self.values[int(l)] for l in self.levels)
        )


def zero_table(m: int, depth: int) -> Int64Table:
    return Int64Table(m, depth, np.zeros(m**depth, dtype=np.int64), 0)


# --- the scaled edge-weight model ---------------------------------------------

class ScaledModel:
    """f_tilde = f_hat - eps * A_c(.) as integers over one denominator Q.

    A weight depends on the edge word only through (value of f_hat on its
    depth-k prefix, agreement level c), so the m^K edges collapse to a
    few hundred distinct combos; solvers work on combo ids.
    """

    def __init__(
        self,
        fhat: CylinderFunction,
        A: ASequence,
        eps: Fraction,
        K: int,
        Y: PeriodicOrbit,
        c_table: np.ndarray,
    ):
        m = fhat.m
        self.m = m
        self.K = K
        self.fhat_depth = fhat.depth
        self.Y = Y
        self.eps = Fraction(eps)
        epsA = [self.eps * A.value(c) for c in range(K + 1)]
        Q = lcm(
            lcm(*(v.denominator for v in fhat.table)),
            lcm(*(v.denominator for v in epsA)) if epsA else 1,
        )
        self.Q = Q
        self.fhat_num = tuple(int(v * Q) for v in fhat.table)
        self.epsA_num = tuple(int(v * Q) for v in epsA)
        self.c_table = c_table
        self.y_edges = orbit_edge_ints(m, K, Y)
        self.y_nodes = orbit_node_ints(m, K, Y)

        uniq: dict = {}
        inverse = np.empty(len(self.fhat_num), dtype=np.int32)
        for i, v in enumerate(self.fhat_num):
            inverse[i] = uniq.setdefault(v, len(uniq))
        self.combo_vals = tuple(uniq)
        width = K + 1
        fid = np.arange(m**K, dtype=np.int64) // (m ** (K - fhat.depth))
        self.combo_id = inverse[fid] * width + self.c_table.astype(np.int32)
        self.combo_w = [
            v - self.epsA_num[c] for v in self.combo_vals for c in range(width)
        ]

    @property
    def node_count(self) -> int:
        return self.m ** (self.K - 1)

    @property
    def edge_count(self) -> int:
        return self.m**self.K

    def weight_num(self, e: int) -> int:
        return self.combo_w[int(self.combo_id[e])]

    def weight(self, e: int) -> Fraction:
        return Fraction(self.weight_num(e), self.Q)

    def cycle_mean(self, edges) -> Fraction:
        total = sum(self.weight_num(e) for e in edges)
        return Fraction(total, self.Q * len(edges))

    def g_level_table(self, A: ASequence) -> LevelTable:
        """The truncated-distance profile A_c(.) as an exact table."""
        return LevelTable(
            self.m, self.K, self.c_table, tuple(A.value(c) for c in range(self.K + 1))
        )

    def f_tilde_cylinder(self) -> CylinderFunction:
        if self.edge_count > DIRECT_TABLE_LIMIT:
            raise ValueError("f_tilde too large to materialize as Fractions")
        Q = self.Q
        return CylinderFunction(
            self.m,
            self.K,
            tuple(
                Fraction(self.combo_w[int(ci)], Q) for ci in self.combo_id
            ),
        )
