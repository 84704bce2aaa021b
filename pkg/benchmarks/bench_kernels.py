"""Time the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
The numba path needs numba importable and RELAYBF_PURE_NUMPY unset; the
first timing excludes JIT compilation (one warmup call per kernel).
"""

import time

import numpy as np

from relaybf import kernels
from relaybf.matkernel import cn_matrix


def _time(fn, *args, repeat=5):
    fn(*args)  # warmup (JIT compile / cache load)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_quadforms(rng):
    n, ncand, nmats = 16, 1000, 36
    wb = cn_matrix(rng, (ncand, n))
    mats = np.empty((nmats, n, n), dtype=np.complex128)
    for k in range(nmats):
        a = cn_matrix(rng, (n, n))
        mats[k] = a @ a.conj().T
    args = (mats, wb)
    rows = [("quadforms_many 1000x36 (n=16)", kernels._np_quadforms_many, args)]
    if kernels.NUMBA_ENABLED:
        rows.append(("quadforms_many numba", kernels._nb_quadforms_many, args))
    return rows


def bench_chain(rng):
    nblocks, L, G, M = 100_000, 4, 2, 16
    p1 = cn_matrix(rng, (M, G))
    p2 = cn_matrix(rng, (M, G))
    gconj = cn_matrix(rng, (M, L))
    v1 = cn_matrix(rng, (L, L))
    v2 = cn_matrix(rng, (L, L))
    group_of = np.repeat(np.arange(G), M // G).astype(np.int64)
    sym = cn_matrix(rng, (nblocks, G, 2))
    nr = cn_matrix(rng, (nblocks, L, 2))
    nu = cn_matrix(rng, (nblocks, M, 2))
    args = (p1, p2, gconj, v1, v2, group_of, sym, nr, nu)
    rows = [("chain_stats 1e5 blocks (L=4, M=16)", kernels._np_chain_stats, args)]
    if kernels.NUMBA_ENABLED:
        rows.append(("chain_stats numba", kernels._nb_chain_stats, args))
    return rows


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.backend()}")
    if not kernels.NUMBA_ENABLED:
        print("numba disabled (RELAYBF_PURE_NUMPY / NUMBA_DISABLE_JIT); timing numpy only\n")
    for name, fn, args in bench_quadforms(rng) + bench_chain(rng):
        dt = _time(fn, *args)
        print(f"{name:<42} {dt * 1e3:9.2f} ms")


if __name__ == "__main__":
    main()
