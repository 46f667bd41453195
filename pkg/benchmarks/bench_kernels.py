"""Compare the numpy and numba kernel backends on solver-shaped workloads.

Times the two hot passes at de Bruijn graph sizes the big solver actually
visits: float64 value iteration (candidate hunting) and the exact
multi-limb monotone pass (certificates).  Arrays are synthetic but shaped
and indexed exactly like the solver's: V = m^(K-1) nodes, m*V edges, edge
weights deduplicated through a combo-id indirection, limb rows in
little-endian two's complement.

    python3 benchmarks/bench_kernels.py            # defaults: K=18, L=3
    python3 benchmarks/bench_kernels.py --K 20 --repeats 7

SHIFTLOCK_BACKEND is ignored here on purpose: both backends are driven
explicitly so one run always yields a side-by-side table.
"""

import argparse
import statistics
import time

import numpy as np

from shiftlock.kernels import HAVE_NUMBA, float_value_iteration, limb_pass
from shiftlock.packed import pack_array


def _workload(m: int, K: int, L: int, n_combos: int, seed: int):
    rng = np.random.default_rng(seed)
    V = m ** (K - 1)
    wf = rng.standard_normal(m * V)
    combo_id = rng.integers(0, n_combos, size=m * V, dtype=np.int64)
    # weight magnitudes chosen so sums stay well inside L limbs
    combo_vals = [int(v) for v in rng.integers(-(2**40), 2**40, size=n_combos)]
    rW = pack_array(combo_vals, L)
    U0 = pack_array([0] * V, L)
    return V, wf, combo_id, rW, U0


def _time(fn, repeats: int):
    fn()  # warmup: JIT compile / page in
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--K", type=int, default=18, help="window length; V = m^(K-1)")
    ap.add_argument("--L", type=int, default=3, help="limbs per exact weight")
    ap.add_argument("--iters", type=int, default=30, help="float value-iteration sweeps")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    m, K, L = args.m, args.K, args.L
    V, wf, combo_id, rW, U0 = _workload(m, K, L, n_combos=512, seed=args.seed)
    print(f"nodes V = {V:,}   edges = {m * V:,}   limbs L = {L}")

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not importable; timing numpy only")

    rows = []
    for backend in backends:
        best, med = _time(
            lambda: float_value_iteration(wf, V, m, args.iters, backend=backend),
            args.repeats,
        )
        rows.append((f"float_value_iteration x{args.iters}", backend, best, med))

        pred = np.zeros(V, dtype=np.int64)

        def one_limb_pass(backend=backend):
            U = U0.copy()
            limb_pass(U, rW, combo_id, V, m, pred, forbid=(), backend=backend)

        best, med = _time(one_limb_pass, args.repeats)
        rows.append(("limb_pass x1", backend, best, med))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  backend  best (s)  median (s)")
    for name, backend, best, med in rows:
        print(f"{name:<{width}}  {backend:<7}  {best:8.4f}  {med:10.4f}")

    for name in sorted({r[0] for r in rows}):
        by = {r[1]: r[2] for r in rows if r[0] == name}
        if "numba" in by and by["numba"] > 0:
            print(f"{name}: numba speedup {by['numpy'] / by['numba']:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
