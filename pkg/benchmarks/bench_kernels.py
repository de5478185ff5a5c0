"""Benchmark the compiled kernels against the pure-numpy fallback.

Run without arguments to time both backends (the script re-invokes itself
with EMPWASS_NUMBA set appropriately), or pass --backend to time just one.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, *args, repeat=5):
    fn(*args)  # warm up (triggers JIT on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_backend(sizes):
    from empwass import _kernels as K

    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        xa = np.sort(rng.random(n))
        xb = np.sort(rng.random(n))
        ca = np.cumsum(np.full(n, 1.0 / n))
        ca[-1] = 1.0
        rows.append(("wpp_staircase", n,
                     _time(K.wpp_staircase, xa, ca.copy(), xb, ca.copy(), 2.0)))

        pts = rng.random((n, 3))
        rows.append(("greedy_cover_pts", n,
                     _time(K.greedy_cover_pts, pts, 0.2)))
        rows.append(("greedy_packing_pts", n,
                     _time(K.greedy_packing_pts, pts, 0.4)))
        centers = pts[:: max(n // 50, 1)].copy()
        rows.append(("assign_nearest_pts", n,
                     _time(K.assign_nearest_pts, pts, centers)))

        m = min(n, 300)
        D = rng.random((m, m))
        D = D + D.T
        np.fill_diagonal(D, 0.0)
        rows.append(("greedy_cover_mat", m, _time(K.greedy_cover_mat, D, 0.5)))

        # the interpreted simplex is O(iters * m^2); keep it small there
        ms = min(m, 120 if K.USE_NUMBA else 40)
        a = np.full(ms, 1.0 / ms)
        C = rng.random((ms, ms))
        rows.append(("transport_simplex", ms,
                     _time(K.transport_simplex, a, a.copy(), C,
                           1e-12, 4000 * (2 * ms + 8), repeat=3)))
    print(f"backend={K.backend()}")
    for name, n, t in rows:
        print(f"{name:22s} n={n:6d}  {t * 1e3:10.3f} ms")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--backend", choices=["numba", "numpy"], default=None)
    ap.add_argument("--sizes", default="1000,10000",
                    help="comma-separated problem sizes")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if args.backend is None:
        for backend in ("numba", "numpy"):
            env = dict(os.environ)
            env["EMPWASS_NUMBA"] = "1" if backend == "numba" else "0"
            subprocess.run([sys.executable, __file__,
                            "--backend", backend, "--sizes", args.sizes],
                           env=env, check=True)
        return

    want = args.backend == "numba"
    os.environ["EMPWASS_NUMBA"] = "1" if want else "0"
    run_backend(sizes)


if __name__ == "__main__":
    main()
