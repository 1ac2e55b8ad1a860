import math

import numpy as np
import pytest

from fracgeom.core import (AngularCone, Ball, Complement, FracParams, HalfSpace, IntervalUnion,
                           QuadSpec, SetOp, Subgraph, transform)
from fracgeom.tail import alpha_analytic, alpha_limit, alpha_s, alpha_s_many

Q = QuadSpec(mc_samples=100_000)


@pytest.mark.parametrize("s", [0.5, 0.1, 0.01])
def test_quarter_plane_closed_form(s):
    E = AngularCone((0, 0), ((0, math.pi / 2),))
    v, e = alpha_s((0, 0), 1.0, E, FracParams(2, s))
    assert abs(s * v - math.pi / 2) <= 1e-12 and e == 0


def test_cone_by_quadrature_matches_closed_form():
    # a base point a hair away from the vertex forces the sampled path
    E = AngularCone((0, 0), ((0.3, 1.9),))
    s = 0.3
    v, e = alpha_s_many((1e-300, 0.0), 1.0, E, [s], Q)
    assert abs(v[0] - 1.6 / s) <= 5 * e[0] + 1e-3


def test_ball_outside_radius():
    # alpha_s(0, r, B_R) = 0 when B_R lies inside B_r
    v, e = alpha_s((0, 0), 2.0, Ball((0.1, 0), 1.0), FracParams(2, 0.5), Q)
    assert v == 0.0


def test_ring_oracle():
    # alpha_s(0, r, C B_R) for R > r: full exterior of B_R, 2 pi R^{-s} / s
    s = 0.4
    v, e = alpha_s((0, 0), 1.0, Complement(Ball((0, 0), 2.0)), FracParams(2, s), Q)
    assert v == pytest.approx(2 * math.pi * 2 ** (-s) / s, rel=1e-9)


def test_one_dimensional():
    v, e = alpha_s((0.0,), 1.0, IntervalUnion(((2.0, math.inf),)), FracParams(1, 0.5))
    assert v == pytest.approx(2 ** -0.5 / 0.5) and e == 0


def test_scaling_and_monotonicity():
    s = 0.2
    p = FracParams(2, s)
    E = Complement(Subgraph("poly", (0.0, 0.0, 1.0)))
    v1, _ = alpha_s((0, 0), 1.0, E, p, Q)
    v2, _ = alpha_s((0, 0), 1.0, Complement(Subgraph("poly", (0.0, 0.0, 2.0))), p, Q)
    assert v2 <= v1     # narrower parabola, smaller set
    H = HalfSpace((0, 1), 0.0)
    vh, _ = alpha_s((0, 0), 1.0, H, p, Q)
    assert v1 <= vh


@pytest.mark.parametrize("E,ref,tol", [
    (HalfSpace((0, 1), 0.0), math.pi, 0.05),
    (Complement(Subgraph("poly", (0, 0, 0, 1.0))), math.pi, 0.1),
])
def test_alpha_limit_catalog(E, ref, tol):
    rep = alpha_limit(E, quad=QuadSpec(mc_samples=200_000))
    assert rep.exists
    assert rep.alpha_lower - tol <= ref <= rep.alpha_upper + tol


def test_alpha_limit_parabola_small():
    rep = alpha_limit(Complement(Subgraph("poly", (0, 0, 1.0))), quad=QuadSpec(mc_samples=200_000))
    assert rep.alpha_upper <= 0.05


def test_analytic_catalog():
    assert alpha_analytic(Ball((0, 0), 1)) == 0
    assert alpha_analytic(HalfSpace((0, 1), 3.0)) == math.pi
    assert alpha_analytic(Subgraph("poly", (0, 0, 1.0))) == 2 * math.pi
    assert alpha_analytic(Complement(Subgraph("poly", (0, 0, 1.0)))) == 0
    assert alpha_analytic(IntervalUnion(((-math.inf, 0.0),))) == 1
    assert alpha_analytic(SetOp("diff", HalfSpace((0, 1), 0.0), Ball((0, 1), 0.5))) == math.pi
    assert alpha_analytic(transform(HalfSpace((0, 1), 0.0), 2.0, 1.0)) == math.pi


def test_rejects_bad_sequences():
    with pytest.raises(ValueError):
        alpha_limit(HalfSpace((0, 1), 0.0), s_sequence=(0.2, 0.1))
    with pytest.raises(ValueError):
        alpha_s((0, 0), 0.0, HalfSpace((0, 1), 0.0), FracParams(2, 0.5))
