import math

import numpy as np
import pytest

from fracgeom import _fallback, kernels
from fracgeom._chords import LineBatch, chords, domain_interval
from fracgeom.core import Ball, BoxDomain, FracParams
from fracgeom.fractal import koch_prefix
from fracgeom.interaction import per_s


def _batch(k=3000, seed=0):
    rng = np.random.default_rng(seed)
    th = rng.random(k) * math.pi
    d = np.stack([np.cos(th), np.sin(th)], 1)
    p = 2.4 * rng.random(k) - 1.2
    return LineBatch(p[:, None] * np.stack([-d[:, 1], d[:, 0]], 1) + 0.4, d)


def test_fallback_always_available():
    assert "numpy" in kernels.available()
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@pytest.mark.skipif("compiled" not in kernels.available(), reason="extension not built")
def test_backends_agree():
    lines = _batch()
    Om = BoxDomain.ball((0.4, 0.4), 1.2)
    w1, w2 = domain_interval(Om, lines)
    E = koch_prefix(3).polygon
    ch = chords(E, lines)
    s = np.array([0.3, 0.7])
    out = {}
    for b in ("compiled", "numpy"):
        kernels.use_backend(b)
        out[b] = kernels.perimeter_forms(ch, w1, w2, s, True)
        out[b + "i"] = kernels.interaction_forms(chords(Ball((0.4, -0.8), 0.2), lines), ch, 0.5)
    kernels.use_backend("compiled")
    for a, b in zip(out["compiled"], out["numpy"]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.allclose(out["compiledi"], out["numpyi"], rtol=1e-12, atol=1e-14)


def test_fallback_chunking_consistent():
    lines = _batch(500)
    ch = chords(Ball((0.4, 0.4), 0.7), lines)
    w1, w2 = domain_interval(BoxDomain.ball((0.4, 0.4), 1.2), lines)
    args = (ch.t, ch.ptr, ch.start.astype(np.uint8), w1, w2, np.array([0.5]), True)
    full = _fallback.perimeter_forms(*args)
    old = _fallback._CHUNK
    try:
        _fallback._CHUNK = 16
        small = _fallback.perimeter_forms(*args)
    finally:
        _fallback._CHUNK = old
    assert np.allclose(full[0], small[0]) and np.allclose(full[1], small[1])


def test_per_s_backend_independent():
    E = Ball((0, 0), 1.0)
    Om = BoxDomain.ball((0, 0), 1.5)
    vals = []
    for b in kernels.available():
        kernels.use_backend(b)
        vals.append(per_s(E, Om, FracParams(2, 0.5)).total)
    kernels.use_backend(kernels.available()[0])
    assert np.allclose(vals, vals[0], rtol=1e-12)
