"""Compare the compiled and numpy kernels on fixed line batches.

    python3 benchmarks/bench_kernels.py [--lines 200000] [--repeat 3]

Prints one row per (workload, backend) with the best wall time and the
largest difference from the compiled result.
"""
import argparse
import math
import time

import numpy as np

from fracgeom import kernels
from fracgeom._chords import LineBatch, chords, domain_interval
from fracgeom.core import Ball, BoxDomain
from fracgeom.fractal import koch_prefix


def _lines(k, seed=0):
    rng = np.random.default_rng(seed)
    th = rng.random(k) * math.pi
    d = np.stack([np.cos(th), np.sin(th)], 1)
    p = 2.2 * rng.random(k) - 1.1
    O = p[:, None] * np.stack([-d[:, 1], d[:, 0]], 1) + np.array([0.5, 0.3])
    return LineBatch(O, d)


def _time(f, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = f()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lines", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    lines = _lines(a.lines)
    Om = BoxDomain.ball((0.5, 0.3), 1.1)
    w1, w2 = domain_interval(Om, lines)
    s = np.array([0.5, 0.75])
    work = {
        "perimeter disk": (chords(Ball((0.5, 0.3), 0.6), lines), None),
        "perimeter koch-4": (chords(koch_prefix(4).polygon, lines), None),
        "interaction disk/koch-3": (chords(Ball((0.5, -0.6), 0.2), lines),
                                   chords(koch_prefix(3).polygon, lines)),
    }
    print(f"{'workload':26s} {'backend':9s} {'seconds':>9s} {'max|diff|':>10s}")
    for name, (c1, c2) in work.items():
        ref = None
        for b in kernels.available():
            kernels.use_backend(b)
            if c2 is None:
                f = lambda: np.concatenate(kernels.perimeter_forms(c1, w1, w2, s, True), 1)
            else:
                f = lambda: kernels.interaction_forms(c2, c1, 0.5)
            t, out = _time(f, a.repeat)
            ref = out if ref is None else ref
            print(f"{name:26s} {b:9s} {t:9.4f} {np.max(np.abs(out - ref)):10.2e}")
    kernels.use_backend(kernels.available()[0])


if __name__ == "__main__":
    main()
