import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fracgeom.core import (Ball, BoxDomain, Complement, FracParams, IntervalUnion,
                           PolygonRegion, QuadSpec, transform)
from fracgeom.interaction import (interaction, interval_interaction_exact, per_s, per_s_many,
                                  per_s_ball_exact, perimeter_asymptotics)

INF = math.inf


def _dbl(I, J, s):
    """scipy oracle for int_I int_J |x-y|^{-1-s} on separated intervals."""
    v, _ = integrate.dblquad(lambda y, x: abs(x - y) ** (-1 - s), I[0], I[1], J[0], J[1],
                             epsabs=1e-13, epsrel=1e-12)
    return v


@pytest.mark.parametrize("I,J,s", [((-1, 0), (0.5, 2), 0.5), ((0, 1), (1.2, 1.3), 0.2),
                                   ((-3, -2), (2, 5), 0.9)])
def test_interval_pairs_vs_quadrature(I, J, s):
    assert interval_interaction_exact(I, J, FracParams(1, s)) == pytest.approx(_dbl(I, J, s), rel=1e-9)


def test_touching_intervals_vs_quadrature():
    s = 0.4
    # adjacent cells: integrable singularity on the diagonal corner
    v, _ = integrate.dblquad(lambda y, x: (y - x) ** (-1 - s), 0, 1, lambda x: 1, lambda x: 2,
                             epsabs=1e-12, epsrel=1e-10)
    assert interval_interaction_exact((0, 1), (1, 2), FracParams(1, s)) == pytest.approx(v, rel=1e-7)


def test_infinite_intervals():
    s = 0.5
    # int_0^1 int_1^inf (y-x)^{-1-s} = int_0^1 (1-x)^{-s}/s = 1 / (s (1-s))
    assert interval_interaction_exact((0, 1), (1, INF), FracParams(1, s)) == pytest.approx(4.0)
    assert interval_interaction_exact((-INF, 0), (0, INF), FracParams(1, s)) == INF
    with pytest.raises(ValueError):
        interval_interaction_exact((0, 2), (1, 3), FracParams(1, s))


def test_halfline_exact():
    rep = per_s(IntervalUnion(((-INF, 0.0),)), BoxDomain.box(-1, 1), FracParams(1, 0.5))
    assert abs(rep.total - 4 * math.sqrt(2)) <= 1e-12
    assert rep.est_error == 0
    assert rep.local == pytest.approx(interval_interaction_exact((-1, 0), (0, 1), FracParams(1, 0.5)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True), st.floats(0.05, 0.95),
       st.floats(0.3, 3.0))
def test_1d_identities(pts, s, lam):
    pts = sorted(pts)
    if min(np.diff(pts)) < 1e-3:
        return
    E = IntervalUnion(tuple(zip(pts[::2], pts[1::2])) if len(pts) > 1 else ())
    Om = BoxDomain.box(-2, 2)
    p = FracParams(1, s)
    a = per_s(E, Om, p)
    # complement symmetry
    assert per_s(Complement(E), Om, p).total == pytest.approx(a.total, rel=1e-10)
    # scaling law
    b = per_s(transform(E, lam), BoxDomain.box(-2 * lam, 2 * lam), p)
    assert b.total == pytest.approx(lam ** (1 - s) * a.total, rel=1e-9)
    # symmetry of the interaction
    if E.bounded:
        F = IntervalUnion(((4.0, 5.0),))
        assert interaction(E, F, p)[0] == pytest.approx(interaction(F, E, p)[0], rel=1e-12)


def test_ball_1d_closed_form():
    p = FracParams(1, 0.3)
    v = per_s(IntervalUnion(((-2.0, 2.0),)), BoxDomain.box(-5, 5), p).total
    assert v == pytest.approx(per_s_ball_exact(2.0, p), rel=1e-12)


def _disk_oracle(s):
    """Per_s(B_1, R^2) = int_B int_0^{2pi} r(x, phi)^{-s} / s dphi dx (radial sum)."""
    def inner(rho):
        f = lambda phi: (-rho * math.cos(phi) + math.sqrt(1 - (rho * math.sin(phi)) ** 2)) ** (-s) / s
        return 2 * integrate.quad(f, 0, math.pi, limit=200, epsabs=1e-12)[0]
    return integrate.quad(lambda r: 2 * math.pi * r * inner(r), 0, 1, limit=200, epsabs=1e-10)[0]


def test_disk_perimeter_vs_radial_oracle():
    s = 0.5
    rep = per_s(Ball((0, 0), 1.0), BoxDomain.ball((0, 0), 1.5), FracParams(2, s),
                QuadSpec(mc_samples=200_000))
    ref = _disk_oracle(s)
    assert abs(rep.total - ref) <= 5 * rep.est_error + 1e-3
    assert rep.truncation_radius_used == INF


def test_interaction_disjoint_squares():
    # two unit squares at distance 3: compare with a tensor Gauss oracle
    s = 0.5
    A = PolygonRegion(((0, 0), (1, 0), (1, 1), (0, 1)))
    B = PolygonRegion(((4, 0), (5, 0), (5, 1), (4, 1)))
    v, e = interaction(A, B, FracParams(2, s), QuadSpec(mc_samples=200_000))
    x, w = np.polynomial.legendre.leggauss(12)
    x, w = 0.5 * (x + 1), 0.5 * w
    X = np.stack(np.meshgrid(x, x, indexing="ij"), -1).reshape(-1, 2)
    W = np.outer(w, w).ravel()
    d = np.linalg.norm(X[:, None] - (X[None] + [4, 0]), axis=-1)
    ref = float(W @ d ** (-2 - s) @ W)
    assert abs(v - ref) <= 5 * e + 1e-6


def test_overlap_rejected():
    with pytest.raises(ValueError):
        interaction(Ball((0, 0), 1.0), Ball((0.5, 0), 1.0), FracParams(2, 0.5))


def test_subadditivity_2d():
    p = FracParams(2, 0.5)
    Om = BoxDomain.ball((0, 0), 3.0)
    q = QuadSpec(mc_samples=100_000)
    A, B = Ball((-0.6, 0), 0.5), Ball((0.6, 0), 0.5)
    from fracgeom.core import SetOp
    union = per_s(SetOp("or", A, B), Om, p, q).total
    assert union <= per_s(A, Om, p, q).total + per_s(B, Om, p, q).total


def test_perimeter_asymptotics_1d():
    E = IntervalUnion(((-INF, 0.0),))
    lim, _, table = perimeter_asymptotics(E, BoxDomain.box(-1, 1), "s->1")
    assert abs(lim - 1.0) <= 1e-3
    lim0, _, _ = perimeter_asymptotics(E, BoxDomain.box(-1, 1), "s->0")
    assert abs(lim0 - 2.0) <= 1e-2
    with pytest.raises(ValueError):
        perimeter_asymptotics(E, BoxDomain.box(-1, 1), "sideways")
