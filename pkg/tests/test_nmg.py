import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from fracgeom.cli import bubble_fixture
from fracgeom.core import BoxDomain, FracParams, QuadSpec, Raster, Subgraph
from fracgeom.curvature import kernel_constants
from fracgeom.nmg import (GridFunction1D, MinimizeOptions, area_local, area_lower_bound,
                          area_nonlocal_truncated, collar_sup, el_residual, functional_FM,
                          hs_gradient, hs_hessian, hs_pointwise, hs_weak, lipschitz_constant,
                          minimize, nonlocal_bound_constant, poincare_sides,
                          raster_perimeter_difference, rearrange_vertical, seminorm,
                          sobolev_norm, truncate_level)
from fracgeom.nmg import _pair_weights, _tiling

P = FracParams(1, 0.5)
LAM = kernel_constants(P)[0]


def _smooth(rng, k=4, amp=1.0):
    c = rng.normal(size=k) * amp / np.arange(1, k + 1)
    ph = rng.random(k) * 2 * np.pi
    return lambda x: sum(ci * np.sin((i + 1) * x + p) for i, (ci, p) in enumerate(zip(c, ph)))


def _grid(rng, N=32, a=-1.0, b=1.0, amp=1.0, tail="zero"):
    return GridFunction1D.from_functions(a, b, N, _smooth(rng, amp=amp), _smooth(rng, amp=amp),
                                         tail=tail)


# ----------------------------------------------------------------------------
# weights

@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("x0,x1,y0,y1", [(0, 0.1, 0.1, 0.2), (0, 0.1, 0.35, 0.5), (-1, 0, 2, 7)])
def test_pair_weights_dblquad(s, x0, x1, y0, y1):
    ref, _ = integrate.dblquad(lambda y, x: (y - x) ** (-1 - s), x0, x1, y0, y1,
                               epsabs=1e-13, epsrel=1e-12)
    assert float(_pair_weights(x0, x1, y0, y1, s)) == pytest.approx(ref, rel=1e-8)


def test_pair_weight_to_infinity():
    s = 0.3
    # int_0^h int_d^inf (y - x)^{-1-s} = ((d)^{1-s} - (d - h)^{1-s}) / (s (1-s))
    h, d = 0.1, 0.4
    ref = (d ** (1 - s) - (d - h) ** (1 - s)) / (s * (1 - s))
    assert float(_pair_weights(0.0, h, d, math.inf, s)) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_exterior_row_sums_exact(s):
    # S_i = L(I_i, C Omega) = int_{I_i} (x-a)^{-s} + (b-x)^{-s} dx / s
    a, b, N = -1.0, 1.0, 16
    T = _tiling(a, b, N, 2 * N, s)
    h = (b - a) / N
    x0 = a + np.arange(N) * h
    F = lambda t: t ** (1 - s) / (s * (1 - s))
    ref = F(x0 + h - a) - F(x0 - a) + F(b - x0) - F(b - x0 - h)
    assert np.allclose(T.S, ref, rtol=1e-13, atol=0)
    assert np.all(T.W_in >= 0) and np.allclose(T.W_in, T.W_in.T, rtol=1e-14)


# ----------------------------------------------------------------------------
# functionals

def test_area_constant_and_shift(rng=np.random.default_rng(1)):
    u = _grid(rng)
    assert area_local(u.with_values(np.full(u.N, 3.7)), P) == 0.0
    a0 = area_local(u, P)
    assert area_local(u.with_values(u.values + 2.5), P) == pytest.approx(a0, rel=1e-12)


def test_zero_data():
    u = GridFunction1D.from_functions(-1, 1, 16, lambda x: 0 * x, lambda x: 0 * x)
    assert functional_FM(u, 0.0, P) == 0.0
    assert area_nonlocal_truncated(u, 0.0, P) == 0.0


def test_area_lower_bound():
    rng = np.random.default_rng(2)
    for amp in (0.1, 1.0, 30.0):
        u = _grid(rng, amp=amp).with_values(amp * rng.normal(size=32))
        assert area_local(u, P) >= area_lower_bound(u, P)


def test_nonlocal_sign_and_bound():
    rng = np.random.default_rng(3)
    for _ in range(10):
        u = _grid(rng, tail="bounded")
        M = float(max(np.abs(u.values).max(), collar_sup(u), -min(u.collar_left.min(), u.collar_right.min())))
        assert area_nonlocal_truncated(u, M, P) >= 0
        for MM in (0.0, M, 5 * M):
            N = area_nonlocal_truncated(u, MM, P)
            C = nonlocal_bound_constant(u, P.s)
            assert abs(N) <= C * LAM * (sobolev_norm(u, P.s) + MM)


def test_nonlocal_can_be_negative():
    # u = phi = c with c much larger than M
    u = GridFunction1D.from_functions(-1, 1, 16, lambda x: 0 * x + 50, lambda x: 0 * x + 50,
                                      tail="bounded")
    assert area_nonlocal_truncated(u, 1.0, P) < 0


def test_strict_convexity():
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = _grid(rng)
        v = u.with_values(u.values + rng.normal(size=u.N))
        w = u.with_values(0.5 * (u.values + v.values))
        M = 2.0
        assert functional_FM(w, M, P) < 0.5 * (functional_FM(u, M, P) + functional_FM(v, M, P))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    u0 = GridFunction1D.from_functions(-1, 1, 128, lambda x: 0 * x, lambda x: 0 * x)
    eps = 1e-4
    worst = 0.0
    for _ in range(20):
        u = u0.with_values(_smooth(rng)(u0.centers))
        v = _smooth(rng)(u0.centers)
        v /= np.max(np.abs(v))
        fd = (functional_FM(u.with_values(u.values + eps * v), 1.0, P)
              - functional_FM(u.with_values(u.values - eps * v), 1.0, P)) / (2 * eps)
        worst = max(worst, abs(fd - hs_weak(u, v, P)))
    assert worst <= 1e-6


def test_hessian_spd_and_consistent():
    rng = np.random.default_rng(6)
    u = _grid(rng)
    H = hs_hessian(u, P)
    assert np.allclose(H, H.T, rtol=1e-13, atol=1e-13)
    assert np.linalg.eigvalsh(H).min() > 0
    v = rng.normal(size=u.N)
    eps = 1e-6
    fd = (hs_gradient(u.with_values(u.values + eps * v), P)
          - hs_gradient(u.with_values(u.values - eps * v), P)) / (2 * eps)
    assert np.allclose(fd, H @ v, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_weak_pairing_bound(s):
    p = FracParams(1, s)
    Lam = kernel_constants(p)[0]
    rng = np.random.default_rng(7)
    for _ in range(10):
        u = _grid(rng, amp=5.0)
        v = rng.normal(size=u.N)
        assert abs(hs_weak(u, v, p)) <= 0.5 * Lam * seminorm(u, s, "line", v)


def test_ball_pairing_bound():
    rng = np.random.default_rng(8)
    u0 = GridFunction1D.from_functions(-8, 8, 128, lambda x: 0 * x, lambda x: 0 * x)
    s = P.s
    for R in (1, 2, 4):
        chi = (np.abs(u0.centers) < R).astype(float)
        per = 2 * (2 * R) ** (1 - s) / (s * (1 - s))
        assert 0.5 * seminorm(u0, s, "line", chi) == pytest.approx(per, rel=1e-12)
        for _ in range(3):
            u = u0.with_values(5 * _smooth(rng)(u0.centers))
            assert abs(hs_weak(u, chi, P)) <= LAM * per


def test_affine_cancellation():
    # on the symmetric window of a cell the affine pairs cancel exactly; the
    # rest is bounded by Lambda times the weight beyond the window
    m = 0.7
    s = P.s
    for theta in (2.0, 8.0):
        u = GridFunction1D.from_functions(-1, 1, 32, lambda x: m * x, lambda x: m * x, theta=theta,
                                          tail="bounded")
        g = hs_gradient(u, P)
        lo, hi = u.a - u.L, u.b + u.L
        R = np.minimum(u.centers - lo, hi - u.centers)
        bound = LAM * 2 * u.h * (R - u.h / 2) ** (-s) / s
        assert np.all(np.abs(g) <= bound)
    # the bound shrinks as the collar grows
    assert bound.max() < 0.6


def test_seminorms_and_poincare():
    rng = np.random.default_rng(9)
    u0 = GridFunction1D.from_functions(-1, 1, 32, lambda x: 0 * x, lambda x: 0 * x)
    for _ in range(10):
        u = u0.with_values(rng.normal(size=32))
        assert seminorm(u, P.s, "line", u.values) >= seminorm(u, P.s)
        lhs, rhs = poincare_sides(u, P.s, (-2.0, 2.0))
        assert lhs <= rhs
    with pytest.raises(ValueError):
        poincare_sides(u, P.s, (-1.0, 1.0))


def test_lipschitz_stability():
    rng = np.random.default_rng(10)
    for _ in range(10):
        u = _grid(rng)
        v = u.with_values(u.values + rng.normal(size=u.N) * 0.3)
        d = u.with_values(u.values - v.values)
        C = lipschitz_constant(u, P.s)
        for M in (0.0, 3.0):
            assert abs(functional_FM(u, M, P) - functional_FM(v, M, P)) <= C * LAM * sobolev_norm(d, P.s)


# ----------------------------------------------------------------------------
# pointwise operator

def test_pointwise_parabola():
    s = 0.5
    mp.mp.dps = 25
    a = (2 + s) / 2
    b = a - 0.5
    lam2 = mp.sqrt(mp.pi) * mp.gamma(b) / mp.gamma(a) / 2
    G = lambda t: lam2 * mp.betainc(0.5, b, 0, t * t / (1 + t * t), regularized=True)
    ref = -4 * mp.quad(lambda t: G(t) * t ** -1.5, [0, 1, 10, mp.inf])
    val, err = hs_pointwise(lambda x: x * x, 0.0, P)
    assert abs(val - float(ref)) <= 1e-6


def test_pointwise_affine_and_minimum():
    v, _ = hs_pointwise(lambda x: 0.3 * x - 1, 0.7, P)
    assert abs(v) <= 1e-9
    w, _ = hs_pointwise(lambda x: (x - 0.2) ** 2 / (1 + (x - 0.2) ** 2), 0.2, FracParams(1, 0.3))
    assert w <= 0


def test_pointwise_rejects_cusp():
    with pytest.raises(ValueError):
        hs_pointwise(lambda x: np.sign(x) * np.abs(x) ** 0.01 * 1e3, 0.0, P)


# ----------------------------------------------------------------------------
# minimizer

def test_zero_data_gives_zero():
    phi = GridFunction1D.from_functions(-1, 1, 128, lambda x: 0 * x, lambda x: 0 * x)
    res = minimize(phi.with_values(np.linspace(-1, 1, 128)), P)
    assert res.converged and np.max(np.abs(res.u.values)) <= 1e-8


def test_minimizer_bounded_and_weak_solution():
    rng = np.random.default_rng(11)
    for _ in range(5):
        B = float(rng.uniform(0.5, 3))
        f = _smooth(rng)
        scale = B / max(1e-12, np.max(np.abs(f(np.linspace(-6, 6, 4001)))))
        phi = GridFunction1D.from_functions(-1, 1, 128, lambda x: 0 * x, lambda x: scale * f(x))
        res = minimize(phi, P, MinimizeOptions(M=B))
        assert res.converged
        R0 = 1.0
        assert np.max(np.abs(res.u.values)) <= R0 + B + 1e-6
        assert np.max(np.abs(el_residual(res.u, P))) <= 1e-6
        assert all(b <= a + 1e-12 for a, b in zip(res.history, res.history[1:]))
    # single cell perturbations increase F
    F0 = functional_FM(res.u, B, P)
    for i in rng.choice(128, 10, replace=False):
        for d in (1e-3, -1e-3):
            w = res.u.values.copy()
            w[i] += d
            assert functional_FM(res.u.with_values(w), B, P) > F0


def test_stickiness():
    M0 = 10 * 2.0
    phi = GridFunction1D.from_functions(-1, 1, 128, lambda x: 0 * x,
                                        lambda x: np.where(x < 0, -M0, M0))
    res = minimize(phi, P, MinimizeOptions(M=M0))
    assert res.converged
    u = res.u.values
    jump_left = abs(u[0] - phi.collar_left[-1])
    jump_right = abs(phi.collar_right[0] - u[-1])
    assert jump_left > phi.h and jump_right > phi.h
    # odd data, odd minimizer
    assert np.allclose(u, -u[::-1], atol=1e-8)


def test_obstacle():
    phi = GridFunction1D.from_functions(-1, 1, 64, lambda x: 0 * x, lambda x: 0 * x)
    psi = np.where(np.abs(phi.centers) < 0.3, 0.5, np.nan)
    res = minimize(phi, P, MinimizeOptions(M=1.0, obstacle=psi))
    assert res.converged
    u = res.u.values
    act = np.isfinite(psi)
    assert np.all(u[act] >= psi[act] - 1e-14)
    contact = act & (u <= psi + 1e-10)
    assert contact.any()
    assert np.all(res.residual[contact] >= -1e-8)
    assert np.all(np.abs(res.residual[~contact]) <= 1e-8)


def test_minimize_validation():
    phi = GridFunction1D.from_functions(-1, 1, 16, lambda x: 0 * x, lambda x: 0 * x, theta=1.0)
    with pytest.raises(ValueError):
        minimize(phi, P)
    with pytest.raises(ValueError):
        MinimizeOptions(M=-1)
    with pytest.raises(ValueError):
        GridFunction1D(0, 1, np.zeros(4), np.zeros(8), np.zeros(8))


# ----------------------------------------------------------------------------
# truncation and rearrangement

def test_truncation():
    rng = np.random.default_rng(12)
    for _ in range(10):
        u = _grid(rng, amp=3.0).with_values(rng.normal(size=32) * 4)
        M = 2.0
        N = 1.0 + collar_sup(u)
        t = truncate_level(u, N)
        assert np.array_equal(truncate_level(t, N).values, t.values)
        assert functional_FM(t, M, P) <= functional_FM(u, M, P)
    v = u.with_values(np.minimum(u.values, 0.5))
    assert np.array_equal(truncate_level(v, 0.5).values, v.values)


def _raster(mask, M=1.0):
    ny, nx = mask.shape
    h = 2.0 / nx
    return Raster((-1.0, -M), h, mask, Subgraph("table", ((-1.0, 1.0), (0.0, 0.0))))


def test_rearrange_subgraph_identity():
    nx, ny = 16, 16
    k = np.random.default_rng(13).integers(0, ny + 1, nx)
    mask = np.arange(ny)[:, None] < k[None, :]
    E = _raster(mask)
    w, Es = rearrange_vertical(E, 1.0)
    assert np.array_equal(Es.grid, E.grid)
    assert np.allclose(w, k * E.cell - 1.0)


def test_rearrange_preserves_column_measure():
    E = bubble_fixture(32, 1.0)
    w, Es = rearrange_vertical(E, 1.0)
    assert np.array_equal(Es.grid.sum(0), E.grid.sum(0))
    col = Es.grid
    # each column is a bottom block
    assert np.all(np.diff(col.astype(int), axis=0) <= 0)


def test_rearrange_rejects_bad_window():
    E = bubble_fixture(16, 1.0)
    with pytest.raises(ValueError):
        rearrange_vertical(E, 2.0)


def test_rearranged_perimeter_decreases():
    E = bubble_fixture(32, 1.0)
    _, Es = rearrange_vertical(E, 1.0)
    Om = BoxDomain.box((-1.0, -1.0), (1.0, 1.0))
    p1, p2, d, e1, e2, de = raster_perimeter_difference(E, Es, Om, FracParams(2, 0.5),
                                                        QuadSpec(mc_samples=20_000))
    assert d == pytest.approx(p1 - p2, rel=1e-9)
    assert d > 3 * de
