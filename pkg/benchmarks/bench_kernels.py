"""Time the compiled and pure-Python dual coordinate descent kernels.

    python benchmarks/bench_kernels.py [--rows N] [--features D] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from costformer.resample import _kernels_py

try:
    from costformer.resample import _kernels
except ImportError:
    _kernels = None


def problem(n: int, d: int, seed: int = 0):
    g = np.random.default_rng(seed)
    y = np.where(g.random(n) < 0.3, 1.0, -1.0)
    X = g.standard_normal((n, d)) + 0.8 * y[:, None] * (np.arange(d) < 3)
    return np.ascontiguousarray(np.hstack([X, np.ones((n, 1))])), y


def run(kernel, X, y, C=1.0, max_iter=1000, tol=1e-3):
    alpha, w = np.zeros(X.shape[0]), np.zeros(X.shape[1])
    t0 = time.perf_counter()
    sweeps, viol = kernel(X, y, alpha, w, C, max_iter, tol)
    return time.perf_counter() - t0, sweeps, viol, w


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=3000)
    ap.add_argument("--features", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    X, y = problem(args.rows, args.features)
    kernels = {"python": _kernels_py.dual_cd}
    if _kernels is not None:
        kernels["cython"] = _kernels.dual_cd
    else:
        print("compiled kernel not built; timing the fallback only")
    best = {}
    for name, k in kernels.items():
        times = []
        for _ in range(args.repeat):
            dt, sweeps, viol, w = run(k, X, y)
            times.append(dt)
        best[name] = min(times)
        print(f"{name:7s} {best[name] * 1e3:9.1f} ms  sweeps={sweeps} violation={viol:.2e} |w|={np.linalg.norm(w):.6f}")
    if len(best) == 2:
        print(f"speedup {best['python'] / best['cython']:.1f}x")


if __name__ == "__main__":
    main()
