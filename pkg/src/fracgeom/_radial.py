"""Closed-form radial integrals along lines through a base point.

For a line q + t d and a trace with toggles t_i (jump eps_i = +1 entering,
-1 leaving), integrals of chi_E(t) |t|^{-1-s} over |t| > r reduce to sums of
an antiderivative evaluated at the toggles.
"""
from __future__ import annotations

import numpy as np

from ._chords import Chords


def _jumps(ch: Chords):
    li = ch.line_index()
    pos = np.arange(len(ch.t)) - ch.ptr[li]
    before = ch.start[li] ^ (pos % 2 == 1)
    return li, np.where(before, -1.0, 1.0)


def _phi(t, r, s):
    """Antiderivative from -inf of 1_{|t|>r} |t|^{-1-s}."""
    a = np.abs(t)
    with np.errstate(divide="ignore"):
        out = np.where(t < -r, a ** (-s), np.where(t > r, 2 * r ** (-s) - a ** (-s), r ** (-s)))
    return out / s


def indicator_integral(ch: Chords, r, s: float) -> np.ndarray:
    """Per line: int_{|t| > r} chi_E(q + t d) |t|^{-1-s} dt.

    ``r > 0`` is a scalar or one radius per line.
    """
    li, eps = _jumps(ch)
    r = np.asarray(r, dtype=float)
    rl = r[li] if r.ndim else r
    acc = np.bincount(li, weights=eps * _phi(ch.t, rl, s), minlength=ch.k)
    return ch.end_state() * (2 * r ** (-s) / s) - acc


def ring_integral(ch: Chords, rho, s: float) -> np.ndarray:
    """Per line: int_{|t| > rho} (chi_{E^c} - chi_E) |t|^{-1-s} dt."""
    rho = np.asarray(rho, dtype=float)
    return 2 * rho ** (-s) / s - 2 * indicator_integral(ch, rho, s)


def pv_integral(ch: Chords, s: float, tol: float = 1e-9):
    """Per line principal value, the base point being a boundary toggle at t = 0.

    Returns ``(values, ok)``; lines without a toggle within ``tol`` of 0 are
    flagged ``ok = False`` and get value NaN.
    """
    li, eps = _jumps(ch)
    at0 = np.abs(ch.t) <= tol
    n0 = np.bincount(li, weights=at0, minlength=ch.k)
    ok = n0 == 1
    t = ch.t
    with np.errstate(divide="ignore"):
        term = np.where(at0, 0.0, np.where(t < 0, eps * np.abs(t) ** (-s), -eps * np.abs(t) ** (-s)))
    val = (2.0 / s) * np.bincount(li, weights=term, minlength=ch.k)
    return np.where(ok, val, np.nan), ok
