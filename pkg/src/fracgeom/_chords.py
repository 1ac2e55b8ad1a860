"""Exact intersections of lines with set descriptors.

A batch of lines ``x = O_k + t d_k`` is described by origins ``(k, n)`` and
either one shared direction ``(n,)`` or per-line directions ``(k, n)``.  The
trace of a set on each line is returned as a :class:`Chords` record: the
membership as ``t -> -inf`` plus the sorted parameters where membership
toggles.  Everything downstream (interaction sums, radial integrals) only
needs these toggles.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from .core import (AngularCone, Ball, BoxDomain, Complement, HalfSpace,
                   IntervalUnion, PolygonRegion, Raster, SetOp, Subgraph, Transformed)

# crossings farther than this (relative to the origin) count as at infinity
T_INF = 1e13


@dataclass
class LineBatch:
    origins: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        self.origins = np.atleast_2d(np.asarray(self.origins, dtype=float))
        d = np.asarray(self.directions, dtype=float)
        if d.ndim == 1:
            d = d / np.linalg.norm(d)
        else:
            d = d / np.linalg.norm(d, axis=1, keepdims=True)
        self.directions = d

    @property
    def k(self) -> int:
        return len(self.origins)

    @property
    def parallel(self) -> bool:
        return self.directions.ndim == 1

    def dirs(self) -> np.ndarray:
        if self.parallel:
            return np.broadcast_to(self.directions, self.origins.shape)
        return self.directions


@dataclass
class Chords:
    start: np.ndarray   # (k,) bool
    ptr: np.ndarray     # (k+1,) int64
    t: np.ndarray       # sorted within each line

    @property
    def k(self):
        return len(self.start)

    def counts(self):
        return np.diff(self.ptr)

    def line_index(self):
        return np.repeat(np.arange(self.k), self.counts())

    def state_after(self):
        """Membership just after each toggle."""
        li = self.line_index()
        pos = np.arange(len(self.t)) - self.ptr[li]
        return self.start[li] ^ (pos % 2 == 0)

    def end_state(self):
        return self.start ^ (self.counts() % 2 == 1)


def from_pairs(k, line, t, start) -> Chords:
    line = np.asarray(line, dtype=np.int64)
    t = np.asarray(t, dtype=float)
    keep = np.isfinite(t) & (np.abs(t) < T_INF)
    # a crossing pushed to infinity still toggles the end state; dropping it
    # would flip the parity, so move it to +-T_INF instead
    far = ~keep & ~np.isnan(t)
    if np.any(far):
        t = t.copy()
        t[far] = np.sign(t[far]) * T_INF
    good = ~np.isnan(t)
    line, t = line[good], t[good]
    order = np.lexsort((t, line))
    line, t = line[order], t[order]
    ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(line, minlength=k), out=ptr[1:])
    return _dedupe(Chords(np.asarray(start, dtype=bool).copy(), ptr, t))


def _dedupe(c: Chords) -> Chords:
    """Drop pairs of coincident toggles on the same line."""
    if len(c.t) < 2:
        return c
    li = c.line_index()
    same = (c.t[1:] == c.t[:-1]) & (li[1:] == li[:-1])
    if not np.any(same):
        return c
    # runs of equal toggles: an even run cancels, an odd run keeps one
    new_run = np.concatenate([[True], ~same])
    run = np.cumsum(new_run) - 1
    length = np.bincount(run)
    pos = np.arange(len(c.t)) - np.flatnonzero(new_run)[run]
    keep = pos >= 2 * (length[run] // 2)
    li = li[keep]
    ptr = np.zeros(c.k + 1, dtype=np.int64)
    np.cumsum(np.bincount(li, minlength=c.k), out=ptr[1:])
    return Chords(c.start, ptr, c.t[keep])


def negate(c: Chords) -> Chords:
    return Chords(~c.start, c.ptr, c.t)


def interval_chords(w1, w2) -> Chords:
    """Chords of the open interval (w1, w2) on each line; NaN means empty."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    k = len(w1)
    ok = np.isfinite(w1) & np.isfinite(w2) & (w2 > w1)
    line = np.repeat(np.flatnonzero(ok), 2)
    t = np.stack([w1[ok], w2[ok]], axis=1).ravel()
    ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.where(ok, 2, 0), out=ptr[1:])
    return Chords(np.zeros(k, dtype=bool), ptr, t)


_OPS = {
    "and": np.logical_and,
    "or": np.logical_or,
    "diff": lambda a, b: a & ~b,
    "xor": np.logical_xor,
}


def combine(a: Chords, b: Chords, op: str) -> Chords:
    """Pointwise boolean combination of two traces on the same lines."""
    f = _OPS[op]
    k = a.k
    la, lb = a.line_index(), b.line_index()
    line = np.concatenate([la, lb])
    t = np.concatenate([a.t, b.t])
    tag = np.concatenate([np.zeros(len(la), bool), np.ones(len(lb), bool)])
    order = np.lexsort((t, line))
    line, t, tag = line[order], t[order], tag[order]
    ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(line, minlength=k), out=ptr[1:])
    ca = np.cumsum(~tag)
    cb = np.cumsum(tag)
    ca0 = np.concatenate([[0], ca])[ptr[:-1]][line]
    cb0 = np.concatenate([[0], cb])[ptr[:-1]][line]
    sa = a.start[line] ^ ((ca - ca0) % 2 == 1)
    sb = b.start[line] ^ ((cb - cb0) % 2 == 1)
    st = f(a.start, b.start)
    cur = f(sa, sb)
    prev = np.empty_like(cur)
    if len(cur):
        prev[1:] = cur[:-1]
        first = np.arange(len(cur)) == ptr[:-1][line]
        prev[first] = st[line[first]]
    keep = cur != prev
    line, t = line[keep], t[keep]
    ptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(line, minlength=k), out=ptr[1:])
    return _dedupe(Chords(st, ptr, t))


# ----------------------------------------------------------------------------
# primitives

def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@singledispatch
def chords(E, lines: LineBatch) -> Chords:
    raise TypeError(f"no line trace for {type(E).__name__}")


@chords.register
def _(E: HalfSpace, lines):
    nu = np.asarray(E.normal)
    on = lines.origins @ nu - E.offset
    dn = lines.dirs() @ nu
    k = lines.k
    start = np.where(dn == 0, on > 0, dn < 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.where(dn == 0, np.nan, -on / dn)
    return from_pairs(k, np.arange(k), t, start)


@chords.register
def _(E: Ball, lines):
    c = np.asarray(E.center)
    w = lines.origins - c
    d = lines.dirs()
    b = np.sum(w * d, axis=1)
    cc = np.sum(w * w, axis=1) - E.radius ** 2
    disc = b * b - cc
    k = lines.k
    hit = disc > 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t1 = -b - np.where(b >= 0, 1.0, -1.0) * sq
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t2 = np.where(t1 != 0, cc / t1, -t1)
    idx = np.flatnonzero(hit)
    line = np.concatenate([idx, idx])
    t = np.concatenate([t1[idx], t2[idx]])
    return from_pairs(k, line, t, np.zeros(k, bool))


@chords.register
def _(E: IntervalUnion, lines):
    o = lines.origins[:, 0]
    d = lines.dirs()[:, 0]
    k = lines.k
    ends = [x for iv in E.intervals for x in iv if np.isfinite(x)]
    if not E.intervals:
        return from_pairs(k, [], [], np.zeros(k, bool))
    left_inf = E.intervals[0][0] == -np.inf
    right_inf = E.intervals[-1][1] == np.inf
    start = np.where(d > 0, left_inf, right_inf)
    if not ends:
        return from_pairs(k, [], [], start)
    e = np.asarray(ends)
    t = (e[None, :] - o[:, None]) / d[:, None]
    line = np.repeat(np.arange(k), len(e))
    return from_pairs(k, line, t.ravel(), start)


@chords.register
def _(E: AngularCone, lines):
    k = lines.k
    d = lines.dirs()
    # membership far out along -d
    back = np.mod(np.arctan2(-d[:, 1], -d[:, 0]), 2 * np.pi)
    start = np.zeros(k, bool)
    for a, b in E.arcs:
        start |= (back > a) & (back < b)
    if E.aperture >= 2 * np.pi - 1e-15:
        return from_pairs(k, [], [], np.ones(k, bool))
    w = lines.origins - np.asarray(E.vertex)
    ls, ts = [], []
    for phi in E.boundary_angles:
        e = np.array([np.cos(phi), np.sin(phi)])
        den = _cross(d, e)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = _cross(e, w) / den
            r = _cross(d, w) / den
        ok = (den != 0) & (r > 0)
        ls.append(np.flatnonzero(ok))
        ts.append(t[ok])
    return from_pairs(k, np.concatenate(ls), np.concatenate(ts), start)


def _soup_parallel(lines, A, B):
    """Crossings of parallel lines with segments A->B (u in [0,1))."""
    d = lines.directions
    nperp = np.array([-d[1], d[0]])
    P = lines.origins @ nperp
    T0 = lines.origins @ d
    order = np.argsort(P, kind="stable")
    Ps = P[order]
    pa, pb = A @ nperp, B @ nperp
    ta, tb = A @ d, B @ d
    up = pa < pb
    lo = np.where(up, np.searchsorted(Ps, pa, "left"), np.searchsorted(Ps, pb, "right"))
    hi = np.where(up, np.searchsorted(Ps, pb, "left"), np.searchsorted(Ps, pa, "right"))
    flat = pa == pb
    cnt = np.where(flat, 0, hi - lo)
    total = int(cnt.sum())
    if total == 0:
        return np.zeros(0, np.int64), np.zeros(0)
    seg = np.repeat(np.arange(len(A)), cnt)
    offs = np.cumsum(cnt) - cnt
    rank = np.arange(total) - offs[seg] + lo[seg]
    line = order[rank]
    u = (Ps[rank] - pa[seg]) / (pb[seg] - pa[seg])
    t = ta[seg] + u * (tb[seg] - ta[seg]) - T0[line]
    return line, t


def _soup_general(lines, A, B):
    d = lines.dirs()
    O = lines.origins
    E = B - A
    ls, ts = [], []
    step = max(1, int(2e6 // max(len(A), 1)))
    for s0 in range(0, lines.k, step):
        dd = d[s0:s0 + step, None, :]
        w = O[s0:s0 + step, None, :] - A[None, :, :]
        den = _cross(dd, E[None])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = _cross(E[None], w) / den
            u = _cross(dd, w) / den
        ok = (den != 0) & (u >= 0) & (u < 1)
        li, _ = np.nonzero(ok)
        ls.append(li + s0)
        ts.append(t[ok])
    return np.concatenate(ls), np.concatenate(ts)


def soup(lines, A, B):
    """Crossings with segments A->B, each owning its start point only."""
    if lines.parallel:
        return _soup_parallel(lines, A, B)
    return _soup_general(lines, A, B)


def _rays(lines, P, r, open_start):
    """Crossings with rays P + u r, u > 0 (open) or u >= 0."""
    d = lines.dirs()
    w = lines.origins - P
    den = _cross(d, r[None])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = _cross(r[None], w) / den
        u = _cross(d, w) / den
    ok = (den != 0) & ((u > 0) if open_start else (u >= 0))
    return np.flatnonzero(ok), t[ok]


@chords.register
def _(E: PolygonRegion, lines):
    A = E.array
    B = np.roll(A, -1, axis=0)
    line, t = soup(lines, A, B)
    return from_pairs(lines.k, line, t, np.zeros(lines.k, bool))


def raster_edges(R: Raster):
    """Boundary edges of the union of marked cells (outside counts as empty)."""
    g = np.pad(R.grid, 1)
    h = R.cell
    x0, y0 = R.origin
    # vertical edges between horizontally adjacent cells
    dv = g[:, 1:] != g[:, :-1]
    j, i = np.nonzero(dv)
    xv = x0 + i * h
    yv = y0 + (j - 1) * h
    Av = np.stack([xv, yv], 1)
    Bv = np.stack([xv, yv + h], 1)
    dh = g[1:, :] != g[:-1, :]
    j, i = np.nonzero(dh)
    xh = x0 + (i - 1) * h
    yh = y0 + j * h
    Ah = np.stack([xh, yh], 1)
    Bh = np.stack([xh + h, yh], 1)
    return np.concatenate([Av, Ah]), np.concatenate([Bv, Bh])


@chords.register
def _(E: Raster, lines):
    A, B = raster_edges(E)
    k = lines.k
    # lines through lattice vertices are a null set for the quadratures
    if len(A):
        line, t = soup(lines, A, B)
        inner = from_pairs(k, line, t, np.zeros(k, bool))
    else:
        inner = from_pairs(k, [], [], np.zeros(k, bool))
    if E.exterior is None:
        return inner
    (x0, y0), (x1, y1) = E.window
    win = PolygonRegion(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))
    outside = combine(chords(E.exterior, lines), chords(win, lines), "diff")
    return combine(outside, inner, "or")


def _poly_compose(c, ox, dx):
    """Ascending t-coefficients of u(ox + t dx) for every line."""
    k = len(ox)
    deg = len(c) - 1
    P = np.zeros((k, deg + 1))
    P[:, 0] = c[-1]
    for j in range(deg - 1, -1, -1):
        Q = np.zeros_like(P)
        Q[:, 0] = ox * P[:, 0]
        Q[:, 1:] = ox[:, None] * P[:, 1:] + dx[:, None] * P[:, :-1]
        Q[:, 0] += c[j]
        P = Q
    return P


def poly_real_roots(P, rel=1e-13):
    """Real roots of many ascending polynomials; returns (row, root, start).

    ``start`` is the sign of each polynomial at -inf (True when positive).
    """
    k, m = P.shape
    scale = np.max(np.abs(P), axis=1)
    scale[scale == 0] = 1.0
    nz = np.abs(P) > rel * scale[:, None]
    eff = np.where(nz.any(1), m - 1 - np.argmax(nz[:, ::-1], axis=1), 0)
    lead = P[np.arange(k), eff]
    start = np.where(eff % 2 == 0, lead > 0, lead < 0)
    rows, roots = [], []
    for D in np.unique(eff):
        if D == 0:
            continue
        idx = np.flatnonzero(eff == D)
        Pk = P[idx, :D + 1] / P[idx, D:D + 1]
        if D == 1:
            r = -Pk[:, 0:1]
        else:
            C = np.zeros((len(idx), D, D))
            C[:, 1:, :-1] = np.eye(D - 1)
            C[:, :, -1] = -Pk[:, :D]
            ev = np.linalg.eigvals(C)
            keep = np.abs(ev.imag) <= 1e-9 * (1 + np.abs(ev.real))
            r = np.where(keep, ev.real, np.nan)
            # two Newton polish steps
            for _ in range(2):
                f = np.zeros_like(r)
                fp = np.zeros_like(r)
                for j in range(D, -1, -1):
                    fp = fp * r + f
                    f = f * r + Pk[:, j:j + 1]
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    stepv = np.where(fp != 0, f / fp, 0.0)
                r = np.where(np.isfinite(stepv) & (np.abs(stepv) < 1e-3 * (1 + np.abs(r))), r - stepv, r)
        rr = np.repeat(idx, r.shape[1])
        ok = ~np.isnan(r.ravel())
        rows.append(rr[ok])
        roots.append(r.ravel()[ok])
    if rows:
        return np.concatenate(rows), np.concatenate(roots), start
    return np.zeros(0, np.int64), np.zeros(0), start


@chords.register
def _(E: Subgraph, lines):
    k = lines.k
    d = lines.dirs()
    O = lines.origins
    if E.kind == "poly":
        c = np.asarray(E.data)
        P = _poly_compose(c, O[:, 0], d[:, 0])
        if P.shape[1] < 2:
            P = np.hstack([P, np.zeros((k, 1))])
        P[:, 0] -= O[:, 1]
        P[:, 1] -= d[:, 1]
        line, t, start = poly_real_roots(P)
        return from_pairs(k, line, t, start)
    xs, us = (np.asarray(a) for a in E.data)
    A = np.stack([xs[:-1], us[:-1]], 1)
    B = np.stack([xs[1:], us[1:]], 1)
    l1, t1 = soup(lines, A, B)
    l2, t2 = _rays(lines, np.array([xs[0], us[0]]), np.array([-1.0, 0.0]), True)
    l3, t3 = _rays(lines, np.array([xs[-1], us[-1]]), np.array([1.0, 0.0]), False)
    side = np.where(d[:, 0] > 0, us[0], us[-1])
    start = np.where(d[:, 1] != 0, d[:, 1] > 0, O[:, 1] < side)
    return from_pairs(k, np.concatenate([l1, l2, l3]), np.concatenate([t1, t2, t3]), start)


@chords.register
def _(E: Complement, lines):
    return negate(chords(E.inner, lines))


@chords.register
def _(E: SetOp, lines):
    return combine(chords(E.a, lines), chords(E.b, lines), E.op)


@chords.register
def _(E: Transformed, lines):
    Q = E.Q
    O = (lines.origins - np.asarray(E.translation)) @ Q / E.scale
    d = lines.directions @ Q
    c = chords(E.inner, LineBatch(O, d))
    return Chords(c.start, c.ptr, c.t * E.scale)


def domain_interval(D: BoxDomain, lines: LineBatch):
    """(w1, w2) with D cut by each line; NaN where the line misses D."""
    O = lines.origins
    d = lines.dirs()
    if D.kind == "ball":
        w = O - np.asarray(D.center)
        b = np.sum(w * d, axis=1)
        disc = b * b - (np.sum(w * w, axis=1) - D.radius ** 2)
        sq = np.sqrt(np.where(disc > 0, disc, np.nan))
        return -b - sq, -b + sq
    lo, hi = np.asarray(D.lower), np.asarray(D.upper)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t_a = (lo - O) / d
        t_b = (hi - O) / d
    tmin = np.where(d == 0, np.where((O > lo) & (O < hi), -np.inf, np.nan), np.minimum(t_a, t_b))
    tmax = np.where(d == 0, np.where((O > lo) & (O < hi), np.inf, np.nan), np.maximum(t_a, t_b))
    w1 = np.max(tmin, axis=1)
    w2 = np.min(tmax, axis=1)
    bad = np.isnan(w1) | np.isnan(w2) | ~(w2 > w1)
    w1 = np.where(bad, np.nan, w1)
    w2 = np.where(bad, np.nan, w2)
    return w1, w2
