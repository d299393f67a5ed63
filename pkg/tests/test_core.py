"""Group arithmetic, norms, projections, and the dimensional constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hlip import core

RNG = np.random.default_rng(20260814)


def random_points(n, size, scale=5.0, rng=RNG):
    p = rng.uniform(-scale, scale, size=(size, 2 * n + 1))
    p[:, -1] = rng.uniform(-(scale**2), scale**2, size=size)
    return p


# --- hand-checked examples -------------------------------------------------


def test_group_mul_hand_example():
    p = core.HPoint(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 0.0)
    q = core.HPoint(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 0.0)
    r = core.group_mul(p, q)
    assert np.allclose(r.x, [1.0, 0.0]) and np.allclose(r.y, [1.0, 0.0])
    assert r.t == -2.0
    assert core.box_norm(r) == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_inverse_and_identity():
    p = core.HPoint(np.array([0.3, -1.2]), np.array([2.0, 0.5]), -0.7)
    e = core.HPoint.origin(2)
    pi = core.group_inv(p)
    assert np.allclose(core.group_mul(p, pi).coords, e.coords, atol=1e-15)
    assert np.allclose(core.group_mul(pi, p).coords, e.coords, atol=1e-15)
    assert np.allclose(core.group_mul(p, e).coords, p.coords)


def test_projection_hand_example():
    p = core.HPoint(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 3.0)
    assert core.height(p) == 1.0
    w = core.project(p)
    assert np.allclose(w.coords, [0.0, 1.0, 0.0, 1.0])  # t - 2 x1 y1 = 1
    # p = proj(p) * (h e_1)
    back = core.exp_x1(core.height(p), w)
    assert np.allclose(back.coords, p.coords, atol=1e-15)


def test_cylinder_norm_hand_example():
    p = core.HPoint(np.array([1.0, 0.0]), np.array([0.0, 2.0]), 4.0)
    assert core.cyl_norm(p) == pytest.approx(2.0, abs=1e-15)
    assert core.in_cylinder(p, core.HPoint.origin(2), 2.0001)
    assert not core.in_cylinder(p, core.HPoint.origin(2), 2.0)


def test_exp_x1_hand_example():
    w = core.WPoint(np.array([0.0]), np.array([3.0, 0.0]), 0.0)
    p = core.exp_x1(1.0, w)
    assert np.allclose(p.coords, [1.0, 0.0, 3.0, 0.0, 6.0])


def test_constants_closed_forms():
    kappa, delta, lo, hi = core.constants(2)
    assert kappa == pytest.approx(8.0 * math.pi / 3.0, abs=1e-12)
    assert delta == pytest.approx(5.0 / math.pi, abs=1e-12)
    assert lo == pytest.approx(4.0 * math.pi / 3.0, abs=1e-12)
    assert hi == pytest.approx(8.0 * math.pi**2 / 15.0, abs=1e-12)
    k3 = core.constants(3)[0]
    assert k3 == pytest.approx(2.0 * math.pi**2.5 / math.gamma(3.5), abs=1e-12)


def test_constants_monte_carlo_disk_volume():
    # L^4 of D_1 in W for n=2: ball^3 x (-1,1), estimated on 1e6 points
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.0, 1.0, size=(1_000_000, 4))
    inside = core.w_box(pts) < 1.0
    est = 16.0 * np.mean(inside)
    kappa = core.constants(2)[0]
    assert abs(est - kappa) / kappa < 0.005


def test_dimension_validation():
    with pytest.raises(ValueError):
        core.constants(1)
    with pytest.raises(ValueError):
        core.Dimension(1)
    with pytest.raises(ValueError):
        core.HPoint(np.array([1.0]), np.array([0.0]), 0.0)
    d = core.Dimension(2)
    assert d.homogeneous_dim == 6 and d.w_dim == 4


def test_dimension_mismatch_rejected():
    p = core.HPoint.origin(2)
    q = core.HPoint.origin(3)
    with pytest.raises(ValueError):
        core.group_mul(p, q)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        core.HPoint(np.array([np.nan, 0.0]), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        core.WPoint(np.array([0.0]), np.array([np.inf, 0.0]), 0.0)


def test_dilate_errors():
    p = core.HPoint.origin(2)
    with pytest.raises(ValueError):
        core.dilate(0.0, p)
    with pytest.raises(ValueError):
        core.in_cylinder(p, p, -1.0)


# --- algebraic properties ---------------------------------------------------


def test_associativity_bulk():
    n = 2
    p, q, r = (random_points(n, 10_000) for _ in range(3))
    lhs = core.mul(core.mul(p, q), r)
    rhs = core.mul(p, core.mul(q, r))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_inverse_identity_bulk():
    for n in (2, 3):
        p = random_points(n, 5_000)
        e = core.mul(core.inv(p), p)
        assert np.max(np.abs(e)) < 1e-12


def test_left_invariance_of_dinf():
    n = 2
    g, p, q = (random_points(n, 5_000) for _ in range(3))
    d0 = core.dinf(p, q)
    d1 = core.dinf(core.mul(g, p), core.mul(g, q))
    assert np.max(np.abs(d0 - d1)) < 1e-10


def test_box_norm_homogeneity_and_symmetry():
    p = random_points(2, 5_000)
    for lam in (0.25, 2.0, 7.5):
        assert np.max(np.abs(core.box(core.dilate_arr(lam, p)) - lam * core.box(p))) < 1e-11
    assert np.max(np.abs(core.box(core.inv(p)) - core.box(p))) == 0.0


def test_box_norm_triangle_inequality():
    p, q = random_points(2, 20_000), random_points(2, 20_000)
    s = core.box(core.mul(p, q))
    assert np.all(s <= core.box(p) + core.box(q) + 1e-12)


def test_dilations_are_automorphisms():
    p, q = random_points(2, 5_000), random_points(2, 5_000)
    for lam in (0.5, 3.0):
        lhs = core.dilate_arr(lam, core.mul(p, q))
        rhs = core.mul(core.dilate_arr(lam, p), core.dilate_arr(lam, q))
        assert np.max(np.abs(lhs - rhs)) < 1e-11


def test_projection_splits_every_point():
    p = random_points(2, 5_000)
    w, h = core.proj(p)
    back = core.mul(core.embed_w(w), _height_vector(h, 2))
    assert np.max(np.abs(back - p)) < 1e-12


def _height_vector(h, n):
    v = np.zeros(np.shape(h) + (2 * n + 1,))
    v[..., 0] = h
    return v


def test_projection_of_w_is_identity():
    w = RNG.uniform(-3, 3, size=(1000, 4))
    w2, h = core.proj(core.embed_w(w))
    assert np.max(np.abs(w2 - w)) == 0.0
    assert np.max(np.abs(h)) == 0.0


def test_w_subgroup_closure():
    a = RNG.uniform(-3, 3, size=(2000, 4))
    b = RNG.uniform(-3, 3, size=(2000, 4))
    direct = core.w_mul(a, b)
    via_h = core.mul(core.embed_w(a), core.embed_w(b))
    assert np.max(np.abs(core.embed_w(direct) - via_h)) < 1e-12
    assert np.max(np.abs(core.w_dinf(a, b) - core.dinf(core.embed_w(a), core.embed_w(b)))) < 1e-12


def test_cylinder_ball_sandwich():
    # B_{r/2} subset C_r subset B_{2r} through the quasi-norm comparison
    p = random_points(2, 50_000, scale=2.0)
    bn = core.box(p)
    cn = core.cylnorm(p)
    assert np.all(cn <= 2.0 * bn + 1e-12)
    assert np.all(bn <= 2.0 * cn + 1e-12)
    for r in (0.5, 1.0, 2.0):
        assert np.all(cn[bn < r / 2] < r)
        assert np.all(bn[cn < r] < 2 * r)


def test_pi_rel_norm_matches_composed_ops():
    p, q = random_points(2, 5_000), random_points(2, 5_000)
    w, _ = core.proj(core.mul(core.inv(p), q))
    ref = core.w_box(w)
    assert np.max(np.abs(core.pi_rel_norm(p, q) - ref)) < 1e-12


# --- hypothesis property tests ----------------------------------------------

coord = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@st.composite
def hpoints(draw, n=2):
    c = draw(st.lists(coord, min_size=2 * n + 1, max_size=2 * n + 1))
    return np.array(c)


@given(hpoints(), hpoints(), hpoints())
@settings(max_examples=200, deadline=None)
def test_associativity_property(p, q, r):
    lhs = core.mul(core.mul(p, q), r)
    rhs = core.mul(p, core.mul(q, r))
    assert np.max(np.abs(lhs - rhs)) < 1e-10


@given(hpoints(), hpoints())
@settings(max_examples=200, deadline=None)
def test_triangle_property(p, q):
    assert core.box(core.mul(p, q)) <= core.box(p) + core.box(q) + 1e-10


@given(hpoints(), st.floats(min_value=0.01, max_value=10.0))
@settings(max_examples=200, deadline=None)
def test_homogeneity_property(p, lam):
    assert abs(core.box(core.dilate_arr(lam, p)) - lam * core.box(p)) < 1e-9 * max(1.0, lam)
