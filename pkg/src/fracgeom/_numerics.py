"""Small numerical helpers."""
from __future__ import annotations

import numpy as np


def poly_extrapolate(x, f, x0: float = 0.0):
    """Value at x0 of the interpolating polynomial through (x_i, f_i) (Neville)."""
    x = np.asarray(x, dtype=float)
    p = np.array(f, dtype=float)
    m = len(x)
    for k in range(1, m):
        p[:m - k] = ((x0 - x[k:]) * p[:m - k] + (x[:m - k] - x0) * p[1:m - k + 1]) / (x[:m - k] - x[k:])
    return float(p[0])


def richardson(x, f, x0: float = 0.0):
    """Polynomial extrapolation to x0 with a drop-one error estimate.

    The points are ordered by distance to ``x0``; the estimate compares the
    full extrapolant with the one that ignores the farthest point.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    order = np.argsort(np.abs(x - x0))
    x, f = x[order], f[order]
    full = poly_extrapolate(x, f, x0)
    if len(x) < 3:
        return full, float("nan")
    return full, abs(full - poly_extrapolate(x[:-1], f[:-1], x0))
