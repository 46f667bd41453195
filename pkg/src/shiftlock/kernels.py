"""Hot kernels for the big-graph solver: numba JIT with pure-numpy twins.

The solver iterates backward-max passes over de Bruijn graphs with ~10^6
edges, in two precisions: float64 (candidate hunting) and multi-limb
two's-complement integers (certificates).  Each pass exists twice with
identical semantics; SHIFTLOCK_BACKEND=numpy|numba forces one, default
is numba when importable.  Multi-limb rows are little-endian uint64.

Edge encoding matches the graph module: edges a*V + u enter node u from
node a*(V//m) + u//m.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - environment without numba
    HAVE_NUMBA = False

    def njit(*a, **k):  # type: ignore
        def wrap(fn):
            return fn

        return wrap if not (len(a) == 1 and callable(a[0])) else a[0]

    prange = range  # type: ignore


def active_backend() -> str:
    forced = os.environ.get("SHIFTLOCK_BACKEND", "").strip().lower()
    if forced:
        if forced not in ("numpy", "numba"):
            raise ValueError(f"unknown backend {forced!r}")
        if forced == "numba" and not HAVE_NUMBA:
            raise RuntimeError("SHIFTLOCK_BACKEND=numba but numba failed to import")
        return forced
    return "numba" if HAVE_NUMBA else "numpy"


# --- float64 value-iteration pass --------------------------------------------


def _float_pass_numpy(U, wf, V, m):
    Vm = V // m
    src = np.arange(V, dtype=np.int64) // m
    best = U[src] + wf[:V]
    arg = np.zeros(V, dtype=np.int64)
    for a in range(1, m):
        cand = U[a * Vm + src] + wf[a * V : (a + 1) * V]
        gt = cand > best
        best[gt] = cand[gt]
        arg[gt] = a
    return best, arg


@njit(cache=True, parallel=True)
def _float_pass_numba(U, wf, V, m, out, arg):  # pragma: no cover - JIT body
    Vm = V // m
    for u in prange(V):
        best = U[u // m] + wf[u]
        ba = 0
        for a in range(1, m):
            c = U[a * Vm + u // m] + wf[a * V + u]
            if c > best:
                best = c
                ba = a
        out[u] = best
        arg[u] = ba


def float_value_iteration(wf, V, m, iters, backend=None):
    """Longest-path value iteration in float64; returns (U, argmax edge per node).

    Used only to find candidate cycles/potentials; never trusted.
    """
    backend = backend or active_backend()
    U = np.zeros(V, dtype=np.float64)
    if backend == "numba":
        out = np.empty(V, dtype=np.float64)
        arg = np.empty(V, dtype=np.int64)
        for _ in range(iters):
            _float_pass_numba(U, wf, V, m, out, arg)
            out -= out.max()
            U, out = out, U
        _float_pass_numba(U, wf, V, m, out, arg)
        return out, arg * V + np.arange(V, dtype=np.int64)
    for _ in range(iters):
        U, _ = _float_pass_numpy(U, wf, V, m)
        U -= U.max()
    U2, arg = _float_pass_numpy(U, wf, V, m)
    return U2, arg * V + np.arange(V, dtype=np.int64)


# --- multi-limb helpers (numpy) -----------------------------------------------


def add_rows(A, B):
    """Row-wise two's-complement addition of (N, L) uint64 limb arrays."""
    out = np.empty_like(A)
    carry = np.zeros(A.shape[0], dtype=np.uint64)
    for l in range(A.shape[1]):
        s = A[:, l] + B[:, l]
        c1 = s < A[:, l]
        t = s + carry
        c2 = t < s
        out[:, l] = t
        carry = (c1 | c2).astype(np.uint64)
    return out


def gt_rows(A, B):
    """Signed row-wise A > B for (N, L) limb arrays."""
    L = A.shape[1]
    gt = A[:, L - 1].view(np.int64) > B[:, L - 1].view(np.int64)
    eq = A[:, L - 1] == B[:, L - 1]
    for l in range(L - 2, -1, -1):
        gt |= eq & (A[:, l] > B[:, l])
        eq &= A[:, l] == B[:, l]
    return gt


# --- exact monotone backward-max pass ------------------------------------------


def _limb_pass_numpy(U, rW, combo_id, V, m, pred, forbid):
    src = np.arange(V, dtype=np.int64) // m
    Vm = V // m
    best = U.copy()
    improved_any = np.zeros(V, dtype=bool)
    for a in range(m):
        Urow = U[a * Vm + src]
        Wrow = rW[combo_id[a * V : (a + 1) * V]]
        cand = add_rows(Urow, Wrow)
        gt = gt_rows(cand, best)
        for e in forbid:
            e = int(e)
            if a * V <= e < (a + 1) * V:
                gt[e - a * V] = False
        if gt.any():
            best[gt] = cand[gt]
            pred[gt] = a * V + np.nonzero(gt)[0]
            improved_any |= gt
    U[...] = best
    return int(improved_any.sum())


@njit(cache=True, parallel=True)
def _limb_pass_numba(U, out, rW, combo_id, V, m, L, pred, forbid, changed):
    # pragma: no cover - JIT body
    CH = 2048
    nch = (V + CH - 1) // CH
    Vm = V // m
    for ch in prange(nch):
        cand = np.empty(L, np.uint64)
        cnt = 0
        lo = ch * CH
        hi = min(V, lo + CH)
        for u in range(lo, hi):
            for l in range(L):
                out[u, l] = U[u, l]
            for a in range(m):
                e = a * V + u
                skip = False
                for t in range(forbid.shape[0]):
                    if forbid[t] == e:
                        skip = True
                if skip:
                    continue
                s = a * Vm + u // m
                ci = combo_id[e]
                carry = np.uint64(0)
                for l in range(L):
                    x = U[s, l] + rW[ci, l]
                    c1 = x < U[s, l]
                    y = x + carry
                    c2 = y < x
                    cand[l] = y
                    carry = np.uint64(1) if (c1 or c2) else np.uint64(0)
                av = np.int64(cand[L - 1])
                bv = np.int64(out[u, L - 1])
                gt = False
                if av != bv:
                    gt = av > bv
                else:
                    for l in range(L - 2, -1, -1):
                        if cand[l] != out[u, l]:
                            gt = cand[l] > out[u, l]
                            break
                if gt:
                    for l in range(L):
                        out[u, l] = cand[l]
                    pred[u] = e
            for l in range(L):
                if out[u, l] != U[u, l]:
                    cnt += 1
                    break
        changed[ch] = cnt


def limb_pass(U, rW, combo_id, V, m, pred, forbid, backend=None):
    """One monotone pass U <- max(U, backward-max of U + r); returns #changed.

    Exact on the packed integer lattice.  A pass returning 0 certifies
    U[tgt] >= U[src] + r(e) for every allowed edge, i.e. no cycle of r
    has positive weight.
    """
    backend = backend or active_backend()
    forbid_arr = np.asarray(list(forbid), dtype=np.int64)
    if backend == "numba":
        L = U.shape[1]
        out = np.empty_like(U)
        CH = 2048
        changed = np.zeros((V + CH - 1) // CH, dtype=np.int64)
        _limb_pass_numba(U, out, rW, combo_id, V, m, L, pred, forbid_arr, changed)
        U[...] = out
        return int(changed.sum())
    return _limb_pass_numpy(U, rW, combo_id, V, m, pred, forbid_arr)


def slack_mask(U, rW_shifted, combo_id, V, m, forbid):
    """Edges with U[src] + r(e) + theta >= U[tgt], theta folded into rW_shifted.

    Run on a stabilized potential: picks out edges of slack >= -theta
    (theta = 0 gives the tight subgraph).  numpy only — single pass.
    """
    src = np.arange(V, dtype=np.int64) // m
    Vm = V // m
    out = np.zeros(V * m, dtype=bool)
    for a in range(m):
        Urow = U[a * Vm + src]
        Wrow = rW_shifted[combo_id[a * V : (a + 1) * V]]
        cand = add_rows(Urow, Wrow)
        out[a * V : (a + 1) * V] = ~gt_rows(U, cand)
    for e in forbid:
        out[int(e)] = False
    return out
