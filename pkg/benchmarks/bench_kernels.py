"""Numba vs pure-numpy kernels: modular RREF, matmul and the span audit.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Results are checked for equality before timings are printed.
"""
import argparse
import time

import numpy as np

from pir_squeeze import _kernels as K
from pir_squeeze import audit
from pir_squeeze.scheme import SystemParams, public_design, retrieve_once


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rref(size, p, repeat):
    rng = np.random.default_rng(size)
    a = rng.integers(0, p, size=(size, size), dtype=np.int64)
    r1, piv1 = K._rref_numba(a.copy(), np.int64(p))  # also warms the JIT
    b = a.copy()
    r2, piv2 = K._rref_numpy(b, p)
    assert r1 == r2 and np.array_equal(piv1, piv2)
    t_nb = best_of(lambda: K._rref_numba(a.copy(), np.int64(p)), repeat)
    t_np = best_of(lambda: K._rref_numpy(a.copy(), p), repeat)
    return t_nb, t_np


def bench_matmul(size, p, repeat):
    rng = np.random.default_rng(size + 1)
    a = rng.integers(0, p, size=(size, size), dtype=np.int64)
    b = rng.integers(0, p, size=(size, size), dtype=np.int64)
    assert np.array_equal(K._matmul_numba(a, b, np.int64(p)), K._matmul_numpy(a, b, p))
    t_nb = best_of(lambda: K._matmul_numba(a, b, np.int64(p)), repeat)
    t_np = best_of(lambda: K._matmul_numpy(a, b, p), repeat)
    return t_nb, t_np


def bench_span(repeat):
    params = SystemParams(2, 4, 2, 2, q=3)
    code, structure = public_design(params)
    run = retrieve_once(params, code, structure)

    def go():
        rep = audit.strategy_completeness_check(run.plan, run.strategy, budget=2000)
        assert rep.trials == 1296 and rep.verdict

    times = {}
    for flag in (True, False):
        K.USE_NUMBA = flag
        go()
        times[flag] = best_of(go, repeat)
    K.USE_NUMBA = True
    return times[True], times[False]


def main():
    ap = argparse.ArgumentParser(allow_abbrev=False)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if K._rref_numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = []
    for size, p in [(60, 7), (200, 65537), (400, 2_147_483_647)]:
        rows.append((f"rref {size}x{size} p={p}",) + bench_rref(size, p, args.repeat))
    for size, p in [(60, 7), (200, 65537), (200, 2_147_483_647)]:
        rows.append((f"matmul {size}x{size} p={p}",) + bench_matmul(size, p, args.repeat))
    rows.append(("span audit (2,4,2,2), 1296 tuples",) + bench_span(max(1, args.repeat // 2)))

    print(f"{'kernel':<40} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for name, t_nb, t_np in rows:
        print(f"{name:<40} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
