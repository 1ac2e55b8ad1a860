"""Contribution from infinity.

    alpha_s(q, r, E) = int_{C B_r(q)} chi_E(y) |y - q|^{-n-s} dy
    alpha(E)         = lim_{s -> 0} s alpha_s(0, 1, E)

alpha_s is computed on lines through q, where the radial integral is exact;
only the direction average is a quadrature.  The limit is extrapolated with
Richardson steps along a decreasing s sequence at two base points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._chords import LineBatch, chords
from ._numerics import poly_extrapolate
from ._radial import indicator_integral
from .core import (AngularCone, Ball, Complement, FracParams, HalfSpace, IntervalUnion,
                   PolygonRegion, QuadSpec, Raster, SetDescriptor, SetOp, Subgraph, Transformed,
                   varpi)

__all__ = ["AlphaReport", "alpha_s", "alpha_s_many", "alpha_limit", "alpha_analytic",
           "DEFAULT_S_SEQUENCE"]

DEFAULT_S_SEQUENCE = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class AlphaReport:
    alpha_upper: float
    alpha_lower: float
    exists: bool
    values: tuple = field(default=())      # (s, s * alpha_s) at the first base
    estimates: tuple = field(default=())   # extrapolated limits used for the envelope


def _cone_at(E, q, n):
    """Aperture when E is a cone with vertex q (or None)."""
    if n == 2 and isinstance(E, AngularCone) and np.allclose(E.vertex, q, atol=0, rtol=0):
        return E.aperture
    if isinstance(E, HalfSpace):
        if abs(float(np.dot(np.atleast_1d(q), E.normal)) - E.offset) == 0:
            return varpi(n) / 2
        return None
    if isinstance(E, Complement):
        a = _cone_at(E.inner, q, n)
        return None if a is None else varpi(n) - a
    if n == 1 and isinstance(E, IntervalUnion):
        q0 = float(np.atleast_1d(q)[0])
        iv = E.intervals
        if iv == ((-math.inf, q0),) or iv == ((q0, math.inf),):
            return 1.0
        if iv == ((-math.inf, q0), (q0, math.inf)):
            return 2.0
    return None


def _directions(n_dir, shift):
    th = (np.arange(n_dir) + shift) * (math.pi / n_dir)
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def alpha_s_many(q, r: float, E: SetDescriptor, s_values, quad: QuadSpec | None = None):
    """alpha_s(q, r, E) for several s with shared directions; (values, errors)."""
    quad = quad or QuadSpec()
    n = E.dim
    q = np.atleast_1d(np.asarray(q, dtype=float))
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    if not r > 0:
        raise ValueError("radius must be positive")
    ap = _cone_at(E, q, n)
    if ap is not None:
        return ap * r ** (-s_values) / s_values, np.zeros(len(s_values))
    if n == 1:
        ch = chords(E, LineBatch(q[None, :], np.ones(1)))
        return np.array([indicator_integral(ch, r, s)[0] for s in s_values]), np.zeros(len(s_values))
    K = quad.replicates
    per = max(1, quad.mc_samples // K)
    rng = np.random.default_rng(quad.rng_seed)
    reps = np.zeros((K, len(s_values)))
    step = 100_000
    for k in range(K):
        d = _directions(per, rng.random())
        for a in range(0, per, step):
            dd = d[a:a + step]
            ch = chords(E, LineBatch(np.broadcast_to(q, dd.shape).copy(), dd))
            for j, s in enumerate(s_values):
                reps[k, j] += indicator_integral(ch, r, s).sum()
    reps *= math.pi / per
    return reps.mean(0), reps.std(0, ddof=1) / math.sqrt(K)


def alpha_s(q, r: float, E: SetDescriptor, params: FracParams, quad: QuadSpec | None = None):
    """alpha_s(q, r, E) and an error estimate.

    Cones with vertex at q (half-spaces through q included) are evaluated in
    closed form, ``aperture * r^{-s} / s``.

    Examples
    --------
    >>> E = AngularCone((0, 0), ((0, math.pi / 2),))
    >>> v, e = alpha_s((0, 0), 1.0, E, FracParams(2, 0.1))
    >>> round(0.1 * v, 12), e
    (1.570796326795, 0.0)
    """
    if E.dim != params.n:
        raise ValueError("set dimension does not match params.n")
    v, e = alpha_s_many(q, r, E, [params.s], quad)
    return float(v[0]), float(e[0])


def _default_second_base(E):
    return (0.31, -0.17), 2.0


def alpha_limit(E: SetDescriptor, params: FracParams | None = None,
                s_sequence=DEFAULT_S_SEQUENCE, quad: QuadSpec | None = None,
                bases=None) -> AlphaReport:
    """Upper/lower estimates of alpha(E) from s * alpha_s as s -> 0.

    At each base point ``(q, r)`` the values ``f_i = s_i alpha_s`` are
    extrapolated to s = 0 by linear and quadratic Richardson steps on the
    smallest s; the envelope of all extrapolants gives ``alpha_upper`` and
    ``alpha_lower``.  The limit is declared to exist when the envelope is
    narrower than 2% of |S^{n-1}|.
    """
    n = E.dim
    quad = quad or QuadSpec()
    s_seq = np.asarray(sorted(s_sequence, reverse=True), dtype=float)
    if len(s_seq) < 4 or np.any(s_seq <= 0) or np.any(s_seq > 0.3):
        raise ValueError("need at least 4 values of s in (0, 0.3]")
    if bases is None:
        bases = [((0.0,) * n, 1.0)]
        q2, r2 = _default_second_base(E)
        bases.append((q2[:n], r2))
    estimates = []
    first = None
    for q, r in bases:
        vals, _ = alpha_s_many(q, r, E, s_seq, quad)
        f = s_seq * vals
        if first is None:
            first = tuple(zip(map(float, s_seq), map(float, f)))
        estimates.append(poly_extrapolate(s_seq[-2:], f[-2:]))
        estimates.append(poly_extrapolate(s_seq[-3:], f[-3:]))
    hi, lo = max(estimates), min(estimates)
    return AlphaReport(float(hi), float(lo), bool(hi - lo <= 0.02 * varpi(n)),
                       first, tuple(map(float, estimates)))


def alpha_analytic(E: SetDescriptor):
    """Catalog value of alpha(E) when it follows from the structure of E, else None.

    Bounded sets give 0, cones their aperture, half-spaces half the sphere,
    complements the complementary value.  Polynomial subgraphs: affine and
    odd degree give pi; even degree gives 2 pi for a positive leading
    coefficient (the region below a convex parabola) and 0 otherwise.
    """
    n = E.dim
    if E.bounded:
        return 0.0
    if isinstance(E, HalfSpace):
        return varpi(n) / 2
    if isinstance(E, AngularCone):
        return E.aperture
    if isinstance(E, IntervalUnion):
        iv = E.intervals
        return float((iv[0][0] == -math.inf) + (iv[-1][1] == math.inf))
    if isinstance(E, Complement):
        a = alpha_analytic(E.inner)
        return None if a is None else varpi(n) - a
    if isinstance(E, Transformed):
        return alpha_analytic(E.inner)
    if isinstance(E, Subgraph):
        if E.kind == "table":
            us = E.data[1]
            return math.pi if us else None
        c = np.asarray(E.data)
        deg = len(c) - 1
        if deg <= 1 or deg % 2 == 1:
            return math.pi
        return 2 * math.pi if c[-1] > 0 else 0.0
    if isinstance(E, SetOp) and E.op == "diff" and E.b.bounded:
        return alpha_analytic(E.a)
    if isinstance(E, Raster) and E.exterior is not None:
        return alpha_analytic(E.exterior)
    return None
