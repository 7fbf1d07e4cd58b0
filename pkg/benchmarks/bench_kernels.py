"""Compare the numba kernels with their numpy / pure-Python fallbacks.

Run ``python3 benchmarks/bench_kernels.py [--repeat 5]``.  Each kernel is
timed on both backends with identical inputs, and the outputs are compared
so a speedup never hides a disagreement.
"""
import argparse
import time

import numpy as np

from mmsobolev import _jit, _kernels
from mmsobolev.generators import random_connected_graph


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    sp = random_connected_graph(rng, 120, 600)
    W = sp.edge_weights
    init = np.full(sp.n, np.inf)
    init[0] = 0.0
    yield "floyd_warshall n=120", lambda: _kernels.floyd_warshall(W)
    yield "hop_tables n=120 k=40", lambda: _kernels.hop_tables(W, init, np.int64(40))

    small = random_connected_graph(rng, 12, 24)
    indptr, indices = small.csr()
    src = np.zeros(12, dtype=np.bool_)
    tgt = np.zeros(12, dtype=np.bool_)
    src[0] = tgt[11] = True
    yield "simple_paths n=12", lambda: _kernels.simple_paths(
        indptr, indices, src, tgt, np.int64(11), np.int64(10 ** 6))

    a, b = 60, 60
    ti, hj = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    ti, hj = ti.ravel().astype(np.int64), (hj.ravel() + a).astype(np.int64)
    costs = rng.uniform(0.1, 2.0, ti.size)
    mu0, mu1 = rng.uniform(0.5, 1.5, a), rng.uniform(0.5, 1.5, b)
    mu1 *= mu0.sum() / mu1.sum()
    supply = np.concatenate([mu0, -mu1])
    yield "network_simplex 60x60", lambda: _kernels.network_simplex(
        np.int64(a + b), ti, hj, costs, supply, 1e4, np.int64(10 ** 6))


def _same(x, y):
    if isinstance(x, tuple):
        return all(_same(u, v) for u, v in zip(x, y))
    return np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rtol=1e-9, atol=1e-9)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'kernel':28s} {'numpy [s]':>11s} {'numba [s]':>11s} {'speedup':>8s}  agree")
    for name, fn in cases(np.random.default_rng(args.seed)):
        _jit.set_backend("numba")
        fn()  # compile outside the timing
        t_jit, out_jit = _best(fn, args.repeat)
        _jit.set_backend("numpy")
        t_np, out_np = _best(fn, args.repeat)
        print(f"{name:28s} {t_np:11.5f} {t_jit:11.5f} {t_np / t_jit:8.1f}  {_same(out_np, out_jit)}")


if __name__ == "__main__":
    main()
