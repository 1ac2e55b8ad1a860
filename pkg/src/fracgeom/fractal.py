"""Koch snowflake prefixes and fractal dimension estimates.

dimF compares how the local s-perimeter of successive prefixes grows: the
increments behave geometrically with ratio rho(s), the series converges for
rho < 1, and the crossover s* gives the dimension n - s*.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._chords import LineBatch, chords, domain_interval
from ._crofton import crofton
from . import kernels
from .core import BoxDomain, PolygonRegion, QuadSpec

__all__ = ["KochPrefix", "SelfSimilarFamily", "koch_prefix", "koch_area", "koch_vertices",
           "threshold_exact", "local_perimeters", "dimF_estimate", "DimFReport",
           "box_counting_dim", "KOCH_DIM"]

KOCH_DIM = math.log(4) / math.log(3)


def koch_vertices(level: int) -> np.ndarray:
    """Counter-clockwise vertices of the level-k snowflake on a unit triangle."""
    if not 0 <= level <= 8:
        raise ValueError("level must lie in 0..8")
    h = math.sqrt(3) / 2
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    for _ in range(level):
        a = v
        b = np.roll(v, -1, axis=0)
        e = b - a
        out = np.array([e[:, 1], -e[:, 0]]).T   # outward for CCW order
        p1 = a + e / 3
        p3 = a + 2 * e / 3
        peak = a + e / 2 + out * (math.sqrt(3) / 6)
        v = np.stack([a, p1, peak, p3], axis=1).reshape(-1, 2)
    return v


def koch_area(level: int) -> float:
    """Area by the recursion area_k = area_{k-1} + 3 4^{k-1} (sqrt3/4) 9^{-k}."""
    a = math.sqrt(3) / 4
    for k in range(1, level + 1):
        a += 3 * 4 ** (k - 1) * (math.sqrt(3) / 4) * 9.0 ** (-k)
    return a


@dataclass(frozen=True)
class KochPrefix:
    level: int
    polygon: PolygonRegion

    @property
    def vertex_count(self):
        return len(self.polygon.vertices)


def koch_prefix(level: int) -> KochPrefix:
    return KochPrefix(level, PolygonRegion(tuple(map(tuple, koch_vertices(level))),
                                           check_simple=level <= 3))


@dataclass(frozen=True)
class SelfSimilarFamily:
    """Self-similar boundary with b pieces per generation, scaled by 1/lambda."""
    b: int
    lam: float
    n: int = 2

    def __post_init__(self):
        if self.b < 2 or not self.lam > 1:
            raise ValueError("need b >= 2 and lambda > 1")


def threshold_exact(family: SelfSimilarFamily) -> float:
    """Crossover s* = n - log b / log lambda (the dimension is log b / log lambda).

    Examples
    --------
    >>> round(threshold_exact(SelfSimilarFamily(4, 3.0)), 5)
    0.73814
    """
    d = math.log(family.b) / math.log(family.lam)
    if not family.n - 1 < d < family.n:
        raise ValueError("dimension log b / log lambda must lie strictly between n - 1 and n")
    return family.n - d


# ----------------------------------------------------------------------------
# local perimeters of prefixes with common lines

def local_perimeters(prefixes, Omega: BoxDomain, s_values, quad: QuadSpec):
    """Per_s^L(E_k, Omega) for every prefix and s, on one common line set.

    Returns ``(values, errors, increment_errors)`` with shape
    (len(prefixes), len(s_values)); ``increment_errors[k]`` is the replicate
    error of ``values[k] - values[k-1]`` (common lines make it small).
    """
    polys = [p.polygon if isinstance(p, KochPrefix) else p for p in prefixes]
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    L, S = len(polys), len(s_values)
    c, r = Omega.bounding_circle()

    def fn(lines):
        w1, w2 = domain_interval(Omega, lines)
        out = []
        for P in polys:
            loc, _ = kernels.perimeter_forms(chords(P, lines), w1, w2, s_values, False)
            out.append(loc)
        # values then successive differences
        vals = np.concatenate(out, axis=1)
        diffs = np.concatenate([out[0]] + [out[i] - out[i - 1] for i in range(1, L)], axis=1)
        return np.concatenate([vals, diffs], axis=1)

    mean, err, _ = crofton(fn, c, r * 1.0000001, quad)
    vals = mean[:L * S].reshape(L, S)
    errs = err[:L * S].reshape(L, S)
    derr = err[L * S:].reshape(L, S)
    return vals, errs, derr


def _ratio(vals, derr):
    """Increment ratio from the last two increments and its error."""
    inc = np.diff(vals, axis=0)
    d1, d0 = inc[-1], inc[-2]
    rho = d1 / d0
    # first-order propagation of the replicate errors
    e = np.abs(rho) * np.sqrt((derr[-1] / d1) ** 2 + (derr[-2] / d0) ** 2)
    return rho, e


@dataclass(frozen=True)
class DimFReport:
    dim: float
    s_star: float
    bracket: tuple
    table: tuple = field(default=())     # rows (s, level, Per_s^L, increment_ratio)
    ratios: tuple = field(default=())    # (s, rho, err)
    bracketed: bool = True               # False: s_grid misses the crossover


def dimF_estimate(prefixes, Omega: BoxDomain, s_grid, quad: QuadSpec | None = None,
                  resolution: float = 0.02, n: int = 2) -> DimFReport:
    """Fractal dimension n - s* from the divergence of local s-perimeters.

    For each s the ratio of the last two increments of Per_s^L along the
    prefix levels classifies s as convergent (rho < 1) or divergent; the
    crossover is located on ``s_grid`` and then bisected to ``resolution``.
    When every grid point falls on one side the grid end nearest the
    crossover is returned with ``bracketed = False``.
    """
    quad = quad or QuadSpec()
    if len(prefixes) < 3:
        raise ValueError("need at least 3 prefixes")
    if not 0 < resolution:
        raise ValueError("resolution must be positive")
    s_grid = np.asarray(sorted(s_grid), dtype=float)
    levels = [p.level if isinstance(p, KochPrefix) else i for i, p in enumerate(prefixes)]
    vals, _, derr = local_perimeters(prefixes, Omega, s_grid, quad)
    rho, rerr = _ratio(vals, derr)
    table = []
    ratios = []

    def record(svals, v, rh, re):
        for j, s in enumerate(svals):
            inc = np.diff(v[:, j])
            for i, lev in enumerate(levels):
                r_i = inc[i - 1] / inc[i - 2] if i >= 2 else float("nan")
                table.append((float(s), int(lev), float(v[i, j]), float(r_i)))
            ratios.append((float(s), float(rh[j]), float(re[j])))

    record(s_grid, vals, rho, rerr)
    div = rho >= 1
    j = int(np.argmax(div))
    if not div.any() or j == 0:
        # no crossover on the grid: report the grid end on the side of rho = 1
        edge = float(s_grid[-1] if not div.any() else s_grid[0])
        table.sort(key=lambda r: (r[0], r[1]))
        ratios.sort()
        return DimFReport(n - edge, edge, (edge, edge), tuple(table), tuple(ratios), False)
    lo, hi = float(s_grid[j - 1]), float(s_grid[j])
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        v, _, de = local_perimeters(prefixes, Omega, [mid], quad)
        rh, re = _ratio(v, de)
        record([mid], v, rh, re)
        if rh[0] >= 1:
            hi = mid
        else:
            lo = mid
    s_star = 0.5 * (lo + hi)
    table.sort(key=lambda r: (r[0], r[1]))
    ratios.sort()
    return DimFReport(n - s_star, s_star, (lo, hi), tuple(table), tuple(ratios))


# ----------------------------------------------------------------------------
# box counting

def _boundary_samples(poly: PolygonRegion, spacing: float) -> np.ndarray:
    a = poly.array
    b = np.roll(a, -1, axis=0)
    L = np.linalg.norm(b - a, axis=1)
    k = np.maximum(1, np.ceil(L / spacing).astype(int))
    seg = np.repeat(np.arange(len(a)), k)
    u = (np.arange(k.sum()) - np.repeat(np.cumsum(k) - k, k)) / np.repeat(k, k)
    return a[seg] + u[:, None] * (b - a)[seg]


def box_counting_dim(E, Omega: BoxDomain | None = None, scales=None, offsets: int = 8,
                     seed: int = 0):
    """Box-counting dimension of the boundary of a polygon.

    N(delta) counts grid boxes of side delta met by the boundary (sampled at
    spacing delta / 8), averaged over random grid offsets; the dimension is
    the least-squares slope of log N against log(1/delta).

    Returns ``(dim, table)`` with rows ``(delta, N)``.
    """
    poly = E.polygon if isinstance(E, KochPrefix) else E
    if scales is None:
        scales = [3.0 ** -k for k in range(1, 6)]
    scales = np.asarray(sorted(scales, reverse=True), dtype=float)
    if len(scales) < 4 or scales[-1] <= 0:
        raise ValueError("need at least 4 positive scales")
    rng = np.random.default_rng(seed)
    pts_all = _boundary_samples(poly, scales.min() / 8)
    if Omega is not None:
        pts_all = pts_all[Omega.contains(pts_all)]
    table = []
    for d in scales:
        counts = []
        for _ in range(max(1, offsets)):
            off = rng.random(2) * d
            ij = np.floor((pts_all - off) / d).astype(np.int64)
            counts.append(len(np.unique(ij[:, 0] * 1_000_003 + ij[:, 1])))
        table.append((float(d), float(np.mean(counts))))
    x = np.log(1 / scales)
    y = np.log([c for _, c in table])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope), tuple(table)
