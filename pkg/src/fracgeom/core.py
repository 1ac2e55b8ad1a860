"""Parameters, set descriptors and domains.

Sets are plain frozen dataclasses. Every variant is measure theoretic: points
on the topological boundary are reported as *not* contained, since boundaries
are null sets for every integral computed here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "FracParams", "QuadSpec", "BoxDomain", "SetDescriptor",
    "HalfSpace", "Ball", "AngularCone", "IntervalUnion", "PolygonRegion",
    "Subgraph", "Complement", "SetOp", "Transformed", "Raster",
    "omega", "varpi", "contains", "transform", "complement",
    "set_to_dict", "set_from_dict", "set_to_json", "set_from_json",
    "domain_to_dict", "domain_from_dict",
]

TWO_PI = 2.0 * math.pi


def omega(n: int) -> float:
    """Volume of the unit ball in R^n (n = 0, 1, 2)."""
    return {0: 1.0, 1: 2.0, 2: math.pi}[n]


def varpi(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (n = 0, 1, 2)."""
    return {0: 0.0, 1: 2.0, 2: TWO_PI}[n]


@dataclass(frozen=True)
class FracParams:
    """Ambient dimension ``n`` and fractional order ``s`` in (0, 1)."""
    n: int
    s: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n!r}")
        s = float(self.s)
        if not (0.0 < s < 1.0) or not math.isfinite(s):
            raise ValueError(f"s must lie in (0, 1), got {self.s!r}")
        object.__setattr__(self, "s", s)

    @property
    def omega_n(self) -> float:
        return omega(self.n)

    @property
    def varpi_n(self) -> float:
        return varpi(self.n)


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature budget.

    ``mc_samples`` is the total number of lines (n = 2 slicing) or directions
    (radial integrals) summed over all ``replicates``; the replicate spread
    gives the error estimate.
    """
    mc_samples: int = 200_000
    replicates: int = 8
    rng_seed: int = 0
    richardson_levels: int = 4
    truncation_radius: float = math.inf
    gauss_nodes: int = 96
    threads: int = 0

    def __post_init__(self):
        if self.mc_samples < 1 or self.replicates < 2:
            raise ValueError("mc_samples >= 1 and replicates >= 2 required")
        if self.truncation_radius <= 0:
            raise ValueError("truncation_radius must be positive")
        if self.richardson_levels < 2:
            raise ValueError("richardson_levels must be >= 2")


# ----------------------------------------------------------------------------
# descriptors

class SetDescriptor:
    """Base class of all set variants."""
    dim: int = 2

    @property
    def bounded(self) -> bool:
        return False

    def bounding_circle(self):
        """(center, radius) of a ball containing a bounded set."""
        raise ValueError(f"{type(self).__name__} is unbounded")

    def contains(self, x):
        raise NotImplementedError


def _pts(x, n):
    x = np.asarray(x, dtype=float)
    if n == 1:
        if x.ndim >= 1 and x.shape[-1] == 1:
            x = x[..., 0]
        return x
    if x.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return x


def _vec(v, n=None):
    v = tuple(float(a) for a in np.atleast_1d(np.asarray(v, dtype=float)))
    if n is not None and len(v) != n:
        raise ValueError(f"expected a vector of length {n}")
    return v


@dataclass(frozen=True)
class HalfSpace(SetDescriptor):
    """{x : x . normal > offset}; the normal points into the set."""
    normal: tuple
    offset: float = 0.0

    def __post_init__(self):
        nu = np.asarray(self.normal, dtype=float).ravel()
        nrm = np.linalg.norm(nu)
        if nu.size not in (1, 2) or not nrm > 0:
            raise ValueError("normal must be a nonzero vector in R^1 or R^2")
        object.__setattr__(self, "normal", tuple(nu / nrm))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return len(self.normal)

    def contains(self, x):
        x = _pts(x, self.dim)
        if self.dim == 1:
            return x * self.normal[0] > self.offset
        return x @ np.asarray(self.normal) > self.offset


@dataclass(frozen=True)
class Ball(SetDescriptor):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    @property
    def bounded(self):
        return True

    def bounding_circle(self):
        return np.asarray(self.center), self.radius

    def contains(self, x):
        x = _pts(x, self.dim)
        c = np.asarray(self.center)
        if self.dim == 1:
            return np.abs(x - c[0]) < self.radius
        return np.sum((x - c) ** 2, axis=-1) < self.radius ** 2


def _normalize_arcs(arcs):
    """Sorted, merged arcs inside [0, 2 pi]."""
    pieces = []
    for a, b in arcs:
        a, b = float(a), float(b)
        if not b > a:
            raise ValueError("each arc needs end > start")
        if b - a >= TWO_PI - 1e-15:
            return ((0.0, TWO_PI),)
        a0 = a % TWO_PI
        b0 = a0 + (b - a)
        if b0 <= TWO_PI:
            pieces.append((a0, b0))
        else:
            pieces.append((a0, TWO_PI))
            pieces.append((0.0, b0 - TWO_PI))
    pieces.sort()
    merged = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return tuple(merged)


@dataclass(frozen=True)
class AngularCone(SetDescriptor):
    """{vertex + r e(phi) : r > 0, phi in a union of open arcs} in R^2."""
    vertex: tuple
    arcs: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertex", _vec(self.vertex, 2))
        object.__setattr__(self, "arcs", _normalize_arcs(self.arcs))

    dim = 2

    @property
    def aperture(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    @cached_property
    def boundary_angles(self):
        """Directions of the boundary rays."""
        ends = []
        arcs = self.arcs
        for i, (a, b) in enumerate(arcs):
            ends.append(a)
            ends.append(b)
        out = []
        for e in ends:
            # 0 and 2 pi are glued; an endpoint shared by two arcs is interior
            hits = sum(1 for a, b in arcs for t in (a, b)
                       if abs(((t - e + math.pi) % TWO_PI) - math.pi) < 1e-14)
            if hits == 1:
                out.append(e % TWO_PI)
        return tuple(sorted(set(out)))

    def contains(self, x):
        x = _pts(x, 2)
        w = x - np.asarray(self.vertex)
        phi = np.mod(np.arctan2(w[..., 1], w[..., 0]), TWO_PI)
        inside = np.zeros(phi.shape, dtype=bool)
        for a, b in self.arcs:
            inside |= (phi > a) & (phi < b)
        if len(self.arcs) == 1 and self.arcs[0] == (0.0, TWO_PI):
            inside = np.ones(phi.shape, dtype=bool)
        # an arc touching 2 pi also covers direction 0 from the glued side
        starts = [a for a, _ in self.arcs]
        ends = [b for _, b in self.arcs]
        if 0.0 in starts and TWO_PI in ends:
            inside |= phi == 0.0
        return inside & (np.sum(w * w, axis=-1) > 0)


@dataclass(frozen=True)
class IntervalUnion(SetDescriptor):
    """Finite union of open intervals of R; endpoints may be infinite."""
    intervals: tuple

    def __post_init__(self):
        iv = sorted((float(a), float(b)) for a, b in self.intervals)
        merged = []
        for a, b in iv:
            if not b > a:
                raise ValueError("interval needs b > a")
            if merged and a < merged[-1][1]:
                raise ValueError("intervals must have disjoint interiors")
            merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    dim = 1

    @property
    def bounded(self):
        return all(math.isfinite(a) and math.isfinite(b) for a, b in self.intervals)

    def bounding_circle(self):
        if not self.bounded or not self.intervals:
            raise ValueError("unbounded interval union")
        lo, hi = self.intervals[0][0], self.intervals[-1][1]
        return np.array([(lo + hi) / 2]), (hi - lo) / 2

    def contains(self, x):
        x = _pts(x, 1)
        out = np.zeros(np.shape(x), dtype=bool)
        for a, b in self.intervals:
            out |= (x > a) & (x < b)
        return out


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p, q, r, t):
    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                       - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))
    return (orient(p, q, r) * orient(p, q, t) < 0) & (orient(r, t, p) * orient(r, t, q) < 0)


@dataclass(frozen=True)
class PolygonRegion(SetDescriptor):
    """Interior of a simple polygon, stored counter-clockwise."""
    vertices: tuple
    check_simple: bool = field(default=True, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices in R^2")
        area = _signed_area(v)
        if area == 0:
            raise ValueError("degenerate polygon")
        if area < 0:
            v = v[::-1]
        if self.check_simple and len(v) <= 2000:
            a, b = v, np.roll(v, -1, axis=0)
            m = len(v)
            i, j = np.triu_indices(m, 2)
            keep = ~((i == 0) & (j == m - 1))
            i, j = i[keep], j[keep]
            if np.any(_segments_cross(a[i], b[i], a[j], b[j])):
                raise ValueError("polygon is not simple")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))

    dim = 2

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def bounded(self):
        return True

    @property
    def area(self) -> float:
        return _signed_area(self.array)

    def bounding_circle(self):
        v = self.array
        c = 0.5 * (v.min(0) + v.max(0))
        return c, float(np.sqrt(np.max(np.sum((v - c) ** 2, axis=1))))

    def contains(self, x):
        x = _pts(x, 2)
        shape = x.shape[:-1]
        x = x.reshape(-1, 2)
        a = self.array
        b = np.roll(a, -1, axis=0)
        out = np.zeros(len(x), dtype=bool)
        step = max(1, int(4e6 // len(a)))
        for k in range(0, len(x), step):
            px, py = x[k:k + step, 0:1], x[k:k + step, 1:2]
            cond = (a[:, 1] > py) != (b[:, 1] > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = a[:, 0] + (py - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
            out[k:k + step] = (np.sum(cond & (px < xi), axis=1) % 2) == 1
        return out.reshape(shape)


@dataclass(frozen=True)
class Subgraph(SetDescriptor):
    """{(x, y) : y < u(x)} in R^2.

    ``kind="poly"``: ``data`` holds ascending coefficients of u.
    ``kind="table"``: ``data = (xs, us)``; u is piecewise linear on the table
    and constant beyond its ends.
    """
    kind: str
    data: tuple

    def __post_init__(self):
        if self.kind == "poly":
            c = np.trim_zeros(np.asarray(self.data, dtype=float).ravel(), "b")
            if c.size == 0:
                c = np.zeros(1)
            object.__setattr__(self, "data", tuple(c))
        elif self.kind == "table":
            xs, us = (np.asarray(d, dtype=float).ravel() for d in self.data)
            if xs.size != us.size or xs.size < 2 or np.any(np.diff(xs) <= 0):
                raise ValueError("table profile needs increasing xs of matching length")
            object.__setattr__(self, "data", (tuple(xs), tuple(us)))
        else:
            raise ValueError("kind must be 'poly' or 'table'")

    dim = 2

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(x, np.asarray(self.data))
        xs, us = self.data
        return np.interp(x, xs, us)

    def dprofile(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            c = np.polynomial.polynomial.polyder(np.asarray(self.data))
            return np.polynomial.polynomial.polyval(x, c)
        xs, us = (np.asarray(d) for d in self.data)
        slope = np.diff(us) / np.diff(xs)
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slope) - 1)
        return np.where((x < xs[0]) | (x > xs[-1]), 0.0, slope[k])

    def contains(self, x):
        x = _pts(x, 2)
        return x[..., 1] < self.profile(x[..., 0])


@dataclass(frozen=True)
class Complement(SetDescriptor):
    inner: SetDescriptor

    @property
    def dim(self):
        return self.inner.dim

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return ~self.inner.contains(x) & ~_on_boundary_hint(self.inner, x)


def _on_boundary_hint(E, x):
    """Points exactly on simple analytic boundaries (keeps complements open)."""
    x = _pts(x, E.dim)
    if isinstance(E, HalfSpace):
        if E.dim == 1:
            return x * E.normal[0] == E.offset
        return x @ np.asarray(E.normal) == E.offset
    if isinstance(E, Ball):
        c = np.asarray(E.center)
        if E.dim == 1:
            return np.abs(x - c[0]) == E.radius
        return np.sum((x - c) ** 2, axis=-1) == E.radius ** 2
    if isinstance(E, IntervalUnion):
        out = np.zeros(np.shape(x), dtype=bool)
        for a, b in E.intervals:
            out |= (x == a) | (x == b)
        return out
    if isinstance(E, Subgraph):
        return x[..., 1] == E.profile(x[..., 0])
    return np.zeros(np.shape(x)[:-1] if E.dim == 2 else np.shape(x), dtype=bool)


_SETOPS = ("and", "or", "diff", "xor")


@dataclass(frozen=True)
class SetOp(SetDescriptor):
    """Boolean combination of two sets: ``and``, ``or``, ``diff`` (a minus b) or ``xor``."""
    op: str
    a: SetDescriptor
    b: SetDescriptor

    def __post_init__(self):
        if self.op not in _SETOPS:
            raise ValueError(f"op must be one of {_SETOPS}")
        if self.a.dim != self.b.dim:
            raise ValueError("operands must have the same dimension")

    @property
    def dim(self):
        return self.a.dim

    @property
    def bounded(self):
        if self.op == "and":
            return self.a.bounded or self.b.bounded
        if self.op == "diff":
            return self.a.bounded
        return self.a.bounded and self.b.bounded

    def bounding_circle(self):
        if not self.bounded:
            raise ValueError("SetOp is unbounded")
        if self.op == "diff" or (self.op == "and" and self.a.bounded and not self.b.bounded):
            return self.a.bounding_circle()
        if self.op == "and" and not self.a.bounded:
            return self.b.bounding_circle()
        (ca, ra), (cb, rb) = self.a.bounding_circle(), self.b.bounding_circle()
        ca, cb = np.asarray(ca, float), np.asarray(cb, float)
        dist = float(np.linalg.norm(cb - ca))
        if dist + rb <= ra:
            return ca, ra
        if dist + ra <= rb:
            return cb, rb
        r = 0.5 * (dist + ra + rb)
        return ca + (cb - ca) * ((r - ra) / dist), r

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        ia, ib = self.a.contains(x), self.b.contains(x)
        if self.op == "and":
            return ia & ib
        if self.op == "or":
            return ia | ib
        if self.op == "diff":
            return ia & ~ib & ~_on_boundary_hint(self.b, x)
        return ia ^ ib


@dataclass(frozen=True)
class Transformed(SetDescriptor):
    """{scale * Q y + translation : y in inner} with Q orthogonal."""
    inner: SetDescriptor
    scale: float = 1.0
    rotation: tuple = ()
    translation: tuple = ()

    def __post_init__(self):
        n = self.inner.dim
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive")
        Q = _rotation_matrix(self.rotation, n)
        object.__setattr__(self, "rotation", tuple(map(tuple, Q)))
        tr = self.translation if len(self.translation) else np.zeros(n)
        object.__setattr__(self, "translation", _vec(tr, n))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dim(self):
        return self.inner.dim

    @property
    def Q(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float)

    @property
    def bounded(self):
        return self.inner.bounded

    def bounding_circle(self):
        c, r = self.inner.bounding_circle()
        return self.scale * (self.Q @ c) + np.asarray(self.translation), self.scale * r

    def to_inner(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            x = _pts(x, 1)
            return (x - self.translation[0]) * self.Q[0, 0] / self.scale
        return ((x - np.asarray(self.translation)) @ self.Q) / self.scale

    def contains(self, x):
        return self.inner.contains(self.to_inner(x))


@dataclass(frozen=True)
class Raster(SetDescriptor):
    """Union of grid cells inside the window, ``exterior`` outside it.

    ``mask[j][i]`` marks the cell ``[x0 + i h, x0 + (i+1) h] x [y0 + j h, ...]``.
    Without an exterior the set is just the union of marked cells.
    """
    origin: tuple
    cell: float
    mask: tuple
    exterior: SetDescriptor | None = None

    def __post_init__(self):
        object.__setattr__(self, "origin", _vec(self.origin, 2))
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("mask must be a nonempty 2-D array")
        if not self.cell > 0:
            raise ValueError("cell size must be positive")
        object.__setattr__(self, "mask", tuple(map(tuple, m.tolist())))
        object.__setattr__(self, "cell", float(self.cell))

    dim = 2

    @cached_property
    def grid(self) -> np.ndarray:
        return np.asarray(self.mask, dtype=bool)

    @property
    def window(self):
        ny, nx = self.grid.shape
        x0, y0 = self.origin
        return (x0, y0), (x0 + nx * self.cell, y0 + ny * self.cell)

    @property
    def bounded(self):
        return self.exterior is None

    def bounding_circle(self):
        lo, hi = (np.asarray(p) for p in self.window)
        c = 0.5 * (lo + hi)
        return c, float(np.linalg.norm(hi - c))

    def contains(self, x):
        x = _pts(x, 2)
        (x0, y0), (x1, y1) = self.window
        ny, nx = self.grid.shape
        i = np.floor((x[..., 0] - x0) / self.cell).astype(np.int64)
        j = np.floor((x[..., 1] - y0) / self.cell).astype(np.int64)
        inw = (x[..., 0] > x0) & (x[..., 0] < x1) & (x[..., 1] > y0) & (x[..., 1] < y1)
        out = np.zeros(inw.shape, dtype=bool)
        out[inw] = self.grid[np.clip(j[inw], 0, ny - 1), np.clip(i[inw], 0, nx - 1)]
        if self.exterior is not None:
            outw = ~inw
            out[outw] = self.exterior.contains(x[outw])
        return out


# ----------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class BoxDomain:
    """Bounded open reference domain: an axis box or a ball."""
    kind: str
    lower: tuple = ()
    upper: tuple = ()
    center: tuple = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "box":
            lo, hi = _vec(self.lower), _vec(self.upper)
            if len(lo) != len(hi) or len(lo) not in (1, 2) or any(a >= b for a, b in zip(lo, hi)):
                raise ValueError("box needs lower < upper componentwise")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        elif self.kind == "ball":
            object.__setattr__(self, "center", _vec(self.center))
            if not self.radius > 0:
                raise ValueError("ball radius must be positive")
        else:
            raise ValueError("kind must be 'box' or 'ball'")

    @classmethod
    def box(cls, lower, upper):
        return cls("box", lower=tuple(np.atleast_1d(lower)), upper=tuple(np.atleast_1d(upper)))

    @classmethod
    def ball(cls, center, radius):
        return cls("ball", center=tuple(np.atleast_1d(center)), radius=float(radius))

    @property
    def dim(self):
        return len(self.lower) if self.kind == "box" else len(self.center)

    def bounding_circle(self):
        if self.kind == "ball":
            return np.asarray(self.center), self.radius
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return 0.5 * (lo + hi), float(np.linalg.norm(hi - lo) / 2)

    @property
    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod(np.subtract(self.upper, self.lower)))
        return omega(self.dim) * self.radius ** self.dim

    @property
    def diameter(self) -> float:
        return 2 * self.bounding_circle()[1] if self.kind == "ball" else float(
            np.linalg.norm(np.subtract(self.upper, self.lower)))

    def as_set(self) -> SetDescriptor:
        if self.kind == "ball":
            return Ball(self.center, self.radius)
        if self.dim == 1:
            return IntervalUnion(((self.lower[0], self.upper[0]),))
        (x0, y0), (x1, y1) = self.lower, self.upper
        return PolygonRegion(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    def contains(self, x):
        return self.as_set().contains(x)


# ----------------------------------------------------------------------------
# operations

def contains(E: SetDescriptor, x):
    """Vectorized membership test; boundary points are excluded."""
    return E.contains(x)


def _rotation_matrix(rotation, n):
    if rotation is None or (hasattr(rotation, "__len__") and len(rotation) == 0):
        return np.eye(n)
    Q = np.asarray(rotation, dtype=float)
    if Q.ndim == 0:
        if n == 1:
            Q = np.array([[float(np.sign(Q)) or 1.0]])
        else:
            c, s = math.cos(float(Q)), math.sin(float(Q))
            Q = np.array([[c, -s], [s, c]])
    if Q.shape != (n, n) or not np.allclose(Q.T @ Q, np.eye(n), atol=1e-12):
        raise ValueError("rotation must be orthogonal")
    return Q


def complement(E: SetDescriptor) -> SetDescriptor:
    if isinstance(E, Complement):
        return E.inner
    return Complement(E)


def transform(E: SetDescriptor, scale: float = 1.0, rotation=None, translation=None) -> SetDescriptor:
    """Image of E under x -> scale * Q x + translation.

    Primitives are mapped in closed form; other variants get wrapped.
    """
    n = E.dim
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError("scale must be positive")
    Q = _rotation_matrix(rotation, n)
    tr = np.zeros(n) if translation is None else np.asarray(_vec(translation, n))
    if scale == 1.0 and np.array_equal(Q, np.eye(n)) and not np.any(tr):
        return E
    fwd = lambda p: scale * (Q @ np.asarray(p, dtype=float)) + tr

    if isinstance(E, Ball):
        return Ball(tuple(fwd(E.center)), scale * E.radius)
    if isinstance(E, HalfSpace):
        nu = Q @ np.asarray(E.normal)
        return HalfSpace(tuple(nu), scale * E.offset + float(tr @ nu))
    if isinstance(E, IntervalUnion):
        q = Q[0, 0]
        iv = []
        for a, b in E.intervals:
            lo, hi = sorted((scale * q * a + tr[0], scale * q * b + tr[0]))
            iv.append((lo, hi))
        return IntervalUnion(tuple(iv))
    if isinstance(E, PolygonRegion):
        v = scale * (E.array @ Q.T) + tr
        return PolygonRegion(tuple(map(tuple, v)), check_simple=False)
    if isinstance(E, AngularCone):
        ang = math.atan2(Q[1, 0], Q[0, 0])
        if np.linalg.det(Q) > 0:
            arcs = [(a + ang, b + ang) for a, b in E.arcs]
        else:
            # reflection x -> Q x maps direction phi to ang - phi
            arcs = [(ang - b, ang - a) for a, b in E.arcs]
        return AngularCone(tuple(fwd(E.vertex)), tuple(arcs))
    if isinstance(E, Complement):
        return complement(transform(E.inner, scale, Q, tr))
    if isinstance(E, SetOp):
        return SetOp(E.op, transform(E.a, scale, Q, tr), transform(E.b, scale, Q, tr))
    if isinstance(E, Transformed):
        Q2 = Q @ E.Q
        t2 = scale * (Q @ np.asarray(E.translation)) + tr
        return transform(E.inner, scale * E.scale, Q2, t2)
    return Transformed(E, scale, tuple(map(tuple, Q)), tuple(tr))


# ----------------------------------------------------------------------------
# serialization

def _f(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def set_to_dict(E: SetDescriptor) -> dict:
    if isinstance(E, HalfSpace):
        return {"variant": "HalfSpace", "normal": list(E.normal), "offset": E.offset}
    if isinstance(E, Ball):
        return {"variant": "Ball", "center": list(E.center), "radius": E.radius}
    if isinstance(E, AngularCone):
        return {"variant": "AngularCone", "vertex": list(E.vertex),
                "arcs": [list(a) for a in E.arcs]}
    if isinstance(E, IntervalUnion):
        return {"variant": "IntervalUnion",
                "intervals": [[_f(a), _f(b)] for a, b in E.intervals]}
    if isinstance(E, PolygonRegion):
        return {"variant": "PolygonRegion", "vertices": [list(v) for v in E.vertices]}
    if isinstance(E, Subgraph):
        if E.kind == "poly":
            return {"variant": "Subgraph", "kind": "poly", "coeffs": list(E.data)}
        return {"variant": "Subgraph", "kind": "table", "xs": list(E.data[0]),
                "us": list(E.data[1])}
    if isinstance(E, Complement):
        return {"variant": "Complement", "inner": set_to_dict(E.inner)}
    if isinstance(E, SetOp):
        return {"variant": "SetOp", "op": E.op, "a": set_to_dict(E.a), "b": set_to_dict(E.b)}
    if isinstance(E, Transformed):
        return {"variant": "Transformed", "inner": set_to_dict(E.inner), "scale": E.scale,
                "rotation": [list(r) for r in E.rotation], "translation": list(E.translation)}
    if isinstance(E, Raster):
        d = {"variant": "Raster", "origin": list(E.origin), "cell": E.cell,
             "mask": E.grid.astype(int).tolist()}
        if E.exterior is not None:
            d["exterior"] = set_to_dict(E.exterior)
        return d
    raise TypeError(f"cannot serialize {type(E).__name__}")


def set_from_dict(d: dict) -> SetDescriptor:
    try:
        v = d["variant"]
    except (KeyError, TypeError):
        raise ValueError("set description needs a 'variant' field") from None
    num = lambda x: float(x)
    if v == "HalfSpace":
        return HalfSpace(tuple(d["normal"]), num(d.get("offset", 0.0)))
    if v == "Ball":
        return Ball(tuple(d["center"]), num(d["radius"]))
    if v == "AngularCone":
        return AngularCone(tuple(d["vertex"]), tuple(tuple(a) for a in d["arcs"]))
    if v == "IntervalUnion":
        return IntervalUnion(tuple((num(a), num(b)) for a, b in d["intervals"]))
    if v == "PolygonRegion":
        return PolygonRegion(tuple(map(tuple, d["vertices"])))
    if v == "Subgraph":
        if d.get("kind", "poly") == "poly":
            return Subgraph("poly", tuple(d["coeffs"]))
        return Subgraph("table", (tuple(d["xs"]), tuple(d["us"])))
    if v == "Complement":
        return Complement(set_from_dict(d["inner"]))
    if v == "SetOp":
        return SetOp(d["op"], set_from_dict(d["a"]), set_from_dict(d["b"]))
    if v == "Transformed":
        return Transformed(set_from_dict(d["inner"]), num(d.get("scale", 1.0)),
                           tuple(map(tuple, d.get("rotation", ()))),
                           tuple(d.get("translation", ())))
    if v == "Raster":
        ext = d.get("exterior")
        return Raster(tuple(d["origin"]), num(d["cell"]), tuple(map(tuple, d["mask"])),
                      set_from_dict(ext) if ext else None)
    raise ValueError(f"unknown set variant {v!r}")


def set_to_json(E: SetDescriptor) -> str:
    return json.dumps(set_to_dict(E), sort_keys=True)


def set_from_json(text: str) -> SetDescriptor:
    return set_from_dict(json.loads(text))


def domain_to_dict(D: BoxDomain) -> dict:
    if D.kind == "box":
        return {"kind": "box", "lower": list(D.lower), "upper": list(D.upper)}
    return {"kind": "ball", "center": list(D.center), "radius": D.radius}


def domain_from_dict(d: dict) -> BoxDomain:
    if d.get("kind") == "ball":
        return BoxDomain.ball(d["center"], d["radius"])
    return BoxDomain.box(d["lower"], d["upper"])
