"""Nonlocal interaction and fractional perimeters.

    L(A, B) = int_A int_B |x - y|^{-n-s} dx dy
    Per_s(E, Omega) = L(E n Omega, E^c n Omega)
                      + L(E n Omega, E^c \\ Omega) + L(E \\ Omega, E^c n Omega)

In one dimension both are finite sums of closed forms.  In the plane the
integrals are sliced into lines and each line is again handled in closed
form; only the integral over the space of lines is numerical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._chords import LineBatch, chords, domain_interval
from ._crofton import crofton
from .core import BoxDomain, FracParams, QuadSpec, SetDescriptor

__all__ = ["PerimeterReport", "interval_interaction_exact", "interaction", "per_s",
           "per_s_many", "per_s_ball_exact", "perimeter_asymptotics"]


@dataclass(frozen=True)
class PerimeterReport:
    local: float
    nonlocal_: float
    total: float
    est_error: float
    truncation_radius_used: float = math.inf
    n_lines: int = 1


def interval_interaction_exact(I, J, params: FracParams) -> float:
    """Exact L(I, J) for two intervals of R with disjoint interiors.

    Endpoints may be infinite as long as the result is finite.

    Examples
    --------
    >>> round(interval_interaction_exact((-1, 0), (0, 1), FracParams(1, 0.5)), 12)
    2.343145750508
    """
    s = params.s
    (a, b), (c, d) = sorted([tuple(map(float, I)), tuple(map(float, J))])
    if not (b > a and d > c):
        raise ValueError("intervals must be nonempty")
    if c < b:
        raise ValueError("intervals overlap")
    e = 1.0 - s
    if math.isinf(a) and math.isinf(d):
        return math.inf
    terms = 0.0
    # jump form with the terms at infinity dropped
    if not math.isinf(a):
        terms += (c - a) ** e
        if not math.isinf(d):
            terms -= (d - a) ** e
    if not math.isinf(d):
        terms += (d - b) ** e
    terms -= (c - b) ** e
    return terms / (s * e)


def _line_1d():
    return LineBatch(np.zeros((1, 1)), np.ones(1))


def _overlap_probe(A, B, dim, n=2000, seed=12345):
    """Cheap check that two sets do not share interior points."""
    for X, Y in ((A, B), (B, A)):
        if X.bounded:
            c, r = X.bounding_circle()
            rng = np.random.default_rng(seed)
            if dim == 1:
                pts = c[0] + r * (2 * rng.random(n) - 1)
            else:
                ang = 2 * math.pi * rng.random(n)
                rad = r * np.sqrt(rng.random(n))
                pts = np.asarray(c) + np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1)
            return bool(np.any(X.contains(pts) & Y.contains(pts)))
    return False


def interaction(A: SetDescriptor, B: SetDescriptor, params: FracParams,
                quad: QuadSpec | None = None):
    """L(A, B) and an error estimate (exactly 0 in one dimension).

    One of the two sets must be bounded.
    """
    quad = quad or QuadSpec()
    if A.dim != params.n or B.dim != params.n:
        raise ValueError("set dimension does not match params.n")
    if not (A.bounded or B.bounded):
        raise ValueError("interaction of two unbounded sets is not supported")
    if _overlap_probe(A, B, params.n):
        raise ValueError("overlap: sets share interior points")
    if params.n == 1:
        line = _line_1d()
        v = kernels.interaction_forms(chords(A, line), chords(B, line), params.s)
        return float(v[0]), 0.0
    c, r = (A if A.bounded else B).bounding_circle()

    def fn(lines):
        return kernels.interaction_forms(chords(A, lines), chords(B, lines), params.s)[:, None]

    mean, err, _ = crofton(fn, c, r * 1.0000001, quad)
    return float(mean[0]), float(err[0])


def per_s_many(E: SetDescriptor, Omega: BoxDomain, s_values, quad: QuadSpec | None = None,
               with_nonlocal=True, n: int | None = None):
    """Local and nonlocal parts for several s at once (shared lines).

    Returns ``(local, nonlocal, local_err, nonlocal_err, total_err)`` arrays.
    """
    quad = quad or QuadSpec()
    n = E.dim if n is None else n
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    ns = len(s_values)
    if Omega.dim != n or E.dim != n:
        raise ValueError("set and domain dimensions must agree")
    if n == 1:
        line = _line_1d()
        w1, w2 = domain_interval(Omega, line)
        loc, non = kernels.perimeter_forms(chords(E, line), w1, w2, s_values, with_nonlocal)
        z = np.zeros(ns)
        return loc[0], non[0], z, z, z
    c, r = Omega.bounding_circle()

    def fn(lines):
        w1, w2 = domain_interval(Omega, lines)
        loc, non = kernels.perimeter_forms(chords(E, lines), w1, w2, s_values, with_nonlocal)
        return np.concatenate([loc, non, loc + non], axis=1)

    mean, err, _ = crofton(fn, c, r * 1.0000001, quad)
    return mean[:ns], mean[ns:2 * ns], err[:ns], err[ns:2 * ns], err[2 * ns:]


def per_s(E: SetDescriptor, Omega: BoxDomain, params: FracParams,
          quad: QuadSpec | None = None) -> PerimeterReport:
    """Fractional perimeter of E relative to Omega, split local / nonlocal.

    Parameters
    ----------
    E : SetDescriptor
        Any set variant of dimension ``params.n``.
    Omega : BoxDomain
        Bounded reference domain.

    Notes
    -----
    Traces on lines are exact up to infinity, so no truncation radius is
    involved and ``truncation_radius_used`` is ``inf``.
    """
    quad = quad or QuadSpec()
    if E.dim != params.n or Omega.dim != params.n:
        raise ValueError("set/domain dimension does not match params.n")
    loc, non, _, _, terr = per_s_many(E, Omega, [params.s], quad)
    lay_lines = 1 if params.n == 1 else quad.mc_samples
    return PerimeterReport(float(loc[0]), float(non[0]), float(loc[0] + non[0]),
                           float(terr[0]), math.inf, lay_lines)


def per_s_ball_exact(R: float, params: FracParams) -> float:
    """Per_s(B_R, R^n) in closed form for n = 1; raises for n = 2."""
    if params.n != 1:
        raise ValueError("closed form only in one dimension")
    s = params.s
    return 2 * (2 * R) ** (1 - s) / (s * (1 - s))


def perimeter_asymptotics(E: SetDescriptor, Omega: BoxDomain, regime: str, s_sequence=None,
                          quad: QuadSpec | None = None):
    """Extrapolated limit of (1-s) Per_s (regime "s->1") or s Per_s ("s->0").

    Default sequences are (0.9, 0.95, 0.99) and (0.1, 0.05, 0.025).  Returns
    ``(limit, err, table)`` with rows ``(s, Per_s, rescaled)``.

    Examples
    --------
    >>> from .core import IntervalUnion
    >>> E = IntervalUnion(((-math.inf, 0.0),))
    >>> lim, err, _ = perimeter_asymptotics(E, BoxDomain.box(-1, 1), "s->1")
    >>> abs(lim - 1) < 1e-3
    True
    """
    from ._numerics import richardson
    if regime in ("s->1", "1"):
        seq = tuple(s_sequence or (0.9, 0.95, 0.99))
        xs = [1 - s for s in seq]
        w = [1 - s for s in seq]
    elif regime in ("s->0", "0"):
        seq = tuple(s_sequence or (0.1, 0.05, 0.025))
        xs = list(seq)
        w = list(seq)
    else:
        raise ValueError("regime must be 's->1' or 's->0'")
    loc, non, _, _, _ = per_s_many(E, Omega, seq, quad)
    tot = loc + non
    table = tuple((float(s), float(v), float(f * v)) for s, v, f in zip(seq, tot, w))
    lim, err = richardson(xs, [r[2] for r in table])
    return lim, err, table
