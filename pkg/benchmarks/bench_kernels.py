"""Compare the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from vbs_entropy import _fallback
from vbs_entropy.model import build_hexagonal_half, build_square_half

try:
    from vbs_entropy import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    out = []
    for n in (16, 64, 128):
        b = rng.standard_normal((n, n))
        a = b + b.T
        out.append((f"jacobi_eigh n={n}", lambda m, a=a: m.jacobi_eigh(a.copy(), 1e-13, 64)))
    g = build_square_half(3, 3)
    bonds = np.asarray(g.bonds, dtype=np.int32)
    boundary = np.asarray(g.boundary, dtype=np.int32)
    u = rng.random((65536, 2 * g.n_vertices))
    out.append(("weighted_uniform_chunk square(3,3) 65536", lambda m: m.weighted_uniform_chunk(u, bonds, boundary)))
    h = build_hexagonal_half(2, 4)
    offsets, neighbors = h.adjacency()
    hb = np.asarray(h.boundary, dtype=np.int32)
    state = rng.standard_normal((h.n_vertices, 3))
    state /= np.linalg.norm(state, axis=1, keepdims=True)
    samples = 4096
    um = rng.random((samples * h.n_vertices, 3))
    out.append((
        f"metropolis_chunk hex(2,4) {samples}",
        lambda m: m.metropolis_chunk(state.copy(), offsets, neighbors, hb, um, math.cos(0.6), 1),
    ))
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"{'kernel':45s} {'python [s]':>12s} {'compiled [s]':>13s} {'speed-up':>9s}")
    for name, fn in cases():
        t_py = best_of(lambda: fn(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:45s} {t_py:12.4f} {'n/a':>13s} {'n/a':>9s}")
            continue
        t_c = best_of(lambda: fn(_kernels), args.repeat)
        print(f"{name:45s} {t_py:12.4f} {t_c:13.4f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
