"""Backend selection for the per-line pair sums.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``FRACGEOM_PURE`` is set) the numpy twin is used.
Both return identical quantities up to rounding.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("FRACGEOM_PURE"):
        raise ImportError("pure backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_backend = _compiled if _compiled is not None else _fallback


def backend() -> str:
    return "compiled" if _backend is _compiled else "numpy"


def available() -> list[str]:
    return (["compiled"] if _compiled is not None else []) + ["numpy"]


def use_backend(name: str) -> None:
    """Switch backend at runtime ("compiled" or "numpy")."""
    global _backend
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _backend = _compiled
    elif name == "numpy":
        _backend = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")


def perimeter_forms(ch, w1, w2, s_values, with_nonlocal=True):
    """Per-line local and nonlocal s-perimeter parts, shape (k, len(s_values))."""
    return _backend.perimeter_forms(
        np.ascontiguousarray(ch.t, dtype=np.float64),
        np.ascontiguousarray(ch.ptr, dtype=np.int64),
        np.ascontiguousarray(ch.start, dtype=np.uint8),
        np.ascontiguousarray(w1, dtype=np.float64),
        np.ascontiguousarray(w2, dtype=np.float64),
        np.ascontiguousarray(np.atleast_1d(s_values), dtype=np.float64),
        bool(with_nonlocal))


def interaction_forms(a, b, s):
    """Per-line 1-D interaction of two traces on the same lines."""
    return _backend.interaction_forms(
        np.ascontiguousarray(a.t, dtype=np.float64), np.ascontiguousarray(a.ptr, dtype=np.int64),
        np.ascontiguousarray(a.start, dtype=np.uint8),
        np.ascontiguousarray(b.t, dtype=np.float64), np.ascontiguousarray(b.ptr, dtype=np.int64),
        np.ascontiguousarray(b.start, dtype=np.uint8), float(s))
