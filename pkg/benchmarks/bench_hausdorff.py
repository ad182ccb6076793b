"""Compare the compiled and numpy nearest-neighbour kernels.

    python3 benchmarks/bench_hausdorff.py [--points N] [--repeat R]
"""

import argparse
import time

import numpy as np

from subshift_ifs import kernels
from subshift_ifs.attractor import compute_attractor, hausdorff_distance, snap
from subshift_ifs.config import load_config


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    eps = 1e-4
    a = snap(rng.uniform(0, 1, (args.points, 2)), eps)
    b = snap(rng.uniform(0, 1, (args.points, 2)), eps)
    koch = load_config("koch")

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':<34}" + "".join(f"{name:>12}" for name in backends))
    rows = {
        f"random 2D d_H ({args.points} pts)": lambda: hausdorff_distance(a, b),
        "nearest_sq only": lambda: a.index.nearest_sq(b.keys),
        "Koch attractor (eps 2e-3)": lambda: compute_attractor(koch.system, 2e-3, 8e-3, 40).n_final,
    }
    prev = kernels.BACKEND
    for label, fn in rows.items():
        cells = []
        ref = None
        for name in backends:
            kernels.use_backend(name)
            t, out = timed(fn, args.repeat)
            if ref is None:
                ref = out
            elif not np.array_equal(np.asarray(ref), np.asarray(out)):
                raise SystemExit(f"backend mismatch on {label}")
            cells.append(f"{t:>11.3f}s")
        print(f"{label:<34}" + "".join(cells))
    kernels.use_backend(prev)


if __name__ == "__main__":
    main()
