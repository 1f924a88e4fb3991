import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from curvedfem.errors import DegenerateTriangle, NewtonDivergence, PointOutsideElement
from curvedfem.geometry import (
    IDENTITY,
    AffineCore,
    ArcBlend,
    ElementMap,
    PolyEdgeBlend,
    build_affine_factorization,
    curvature_field,
    eval_F,
    eval_G,
    hessian_F,
    jacobian_F,
    pullback_gradient,
    pullback_hessian,
    pushforward_gradient,
    pushforward_hessian,
    transported_direction,
)
from oracles import fd_hessian, fd_jacobian, map_variants, quarter_arc_map, reference_points, rel_err

VARIANTS = map_variants()
CURVED = [k for k in VARIANTS if k != "identity"]

coord = st.floats(-10.0, 10.0, allow_nan=False)
point = st.tuples(coord, coord).map(np.array)


def _area2(p1, p2, p3):
    return abs((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p2[1] - p1[1]) * (p3[0] - p1[0]))


# -- affine factorization ----------------------------------------------------


def test_reference_triangle_factorization():
    fact, amap = build_affine_factorization(*np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert (fact.h1, fact.h2) == pytest.approx((1.0, 1.0))
    assert (fact.s, fact.t, fact.theta) == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)
    np.testing.assert_allclose(amap.A, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(amap.b, 0.0, atol=1e-15)


def test_right_triangle_relabels_apex():
    core = AffineCore.from_points(np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(core.p1, [0.0, 0.0])
    assert core.h1 == pytest.approx(2.0)
    assert core.h2 == pytest.approx(1.0)
    assert core.hT == pytest.approx(math.sqrt(5.0))


def test_collinear_points_rejected():
    with pytest.raises(DegenerateTriangle):
        build_affine_factorization(np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([2.0, 2.0]))


@given(point, point, point)
def test_factorization_properties(p1, p2, p3):
    edges = [np.linalg.norm(p2 - p3), np.linalg.norm(p3 - p1), np.linalg.norm(p1 - p2)]
    assume(_area2(p1, p2, p3) > 1e-3 * max(edges) ** 2)
    fact, amap = build_affine_factorization(p1, p2, p3)
    assert fact.s**2 + fact.t**2 == pytest.approx(1.0, abs=1e-12)
    assert fact.t > 0.0
    assert fact.h2 <= fact.h1 * (1 + 1e-12)
    np.testing.assert_allclose(fact.A, amap.A, atol=1e-12 * max(edges))

    core = AffineCore.from_points(np.array([p1, p2, p3]))
    assert core.hT == pytest.approx(max(edges))
    assert np.linalg.norm(core.p2 - core.p3) == pytest.approx(core.hT)
    assert core.hT / 2 < core.h1 <= core.hT * (1 + 1e-12)
    assert core.HT == pytest.approx(core.h1 * core.h2 * core.hT / core.area)
    for r in (core.r1, core.r2):
        assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(core.affine(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])),
                               [core.p1, core.p2, core.p3], atol=1e-12 * core.hT)


# -- map evaluation ----------------------------------------------------------


def test_identity_map_is_identity():
    emap = ElementMap(AffineCore.from_points(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).affine)
    np.testing.assert_allclose(eval_F(emap, np.array([0.3, 0.2])), [0.3, 0.2], atol=1e-15)


def test_quarter_arc_midpoint_and_apex():
    emap = quarter_arc_map()
    np.testing.assert_allclose(eval_F(emap, np.array([0.5, 0.5])), [math.sqrt(0.5)] * 2, atol=1e-15)
    np.testing.assert_array_equal(eval_F(emap, np.array([0.0, 0.0])), [0.0, 0.0])
    q = np.array([[0.2, 0.3], [0.6, 0.1]])
    assert np.all(np.linalg.det(jacobian_F(emap, q)) > 0.0)


@pytest.mark.parametrize("name", ["exact_arc", "quarter_arc"])
def test_arc_edge_on_unit_circle(name):
    corr = VARIANTS[name].correction
    s = np.linspace(0.0, 1.0, 201)
    x = corr.edge_point(s)
    assert np.abs(np.linalg.norm(x, axis=1) - 1.0).max() <= 1e-12


@pytest.mark.parametrize("order", [2, 3])
def test_poly_edge_interpolates_arc_nodes(order):
    ta, tb = 0.3, 0.9
    a, b = np.array([math.cos(ta), math.sin(ta)]), np.array([math.cos(tb), math.sin(tb)])
    corr = PolyEdgeBlend(a, b, np.zeros(2), ta, tb, order)
    s = np.linspace(0.0, 1.0, order + 1)
    phi = ta + s * (tb - ta)
    np.testing.assert_allclose(corr.edge_point(s), np.column_stack([np.cos(phi), np.sin(phi)]), atol=1e-15)


@pytest.mark.parametrize("name", CURVED)
def test_straight_edges_untouched(name):
    corr = VARIANTS[name].correction
    t = np.linspace(0.0, 1.0, 11)[:, None]
    for p in (corr.a, corr.b):
        y = (1 - t) * corr.c + t * p
        np.testing.assert_allclose(corr(y), y, atol=1e-15)


# -- derivatives against finite differences ---------------------------------


@pytest.mark.parametrize("name", list(VARIANTS))
def test_jacobian_matches_fd(name):
    emap = VARIANTS[name]
    x = reference_points(100, seed=1)
    assert rel_err(jacobian_F(emap, x), fd_jacobian(emap, x, 1e-6)) <= 1e-6


@pytest.mark.parametrize("name", list(VARIANTS))
def test_hessian_matches_fd(name):
    emap = VARIANTS[name]
    x = reference_points(100, seed=2)
    H, Hfd = hessian_F(emap, x), fd_hessian(emap, x, 1e-4)
    if name == "identity":
        assert np.all(H == 0.0)
        assert np.abs(Hfd).max() <= 1e-6
    else:
        assert rel_err(H, Hfd) <= 1e-4
    np.testing.assert_array_equal(H[..., 0, 1], H[..., 1, 0])


@pytest.mark.parametrize("name", list(VARIANTS))
def test_chain_rule_consistency(name):
    emap = VARIANTS[name]
    x = reference_points(100, seed=3)
    direct = emap.correction.jacobian(emap.affine(x)) @ emap.affine.A
    assert rel_err(jacobian_F(emap, x), direct) <= 1e-12


@pytest.mark.parametrize("name", list(VARIANTS))
def test_round_trip_and_inverse_jacobian(name):
    emap = VARIANTS[name]
    xhat = reference_points(100, seed=4)
    x = emap(xhat)
    np.testing.assert_allclose(eval_G(emap, x), xhat, atol=1e-10)
    prod = emap.inverse_jacobian(x) @ emap.jacobian(xhat)
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(2), prod.shape), atol=1e-8)
    assert np.abs(emap(eval_G(emap, x)) - x).max() <= 1e-12 * emap.size


@pytest.mark.parametrize("name", list(VARIANTS))
def test_inverse_derivatives_match_fd(name):
    emap = VARIANTS[name]
    x = emap(reference_points(100, seed=5))
    h = emap.size

    def G(p):
        return emap.inverse(p, check=False)

    assert rel_err(emap.inverse_jacobian(x), fd_jacobian(G, x, 1e-4 * h)) <= 1e-6
    HG, HGfd = emap.inverse_hessian(x), fd_hessian(G, x, 1e-3 * h)
    if name == "identity":
        assert np.all(HG == 0.0)
    else:
        assert rel_err(HG, HGfd) <= 1e-4


def test_far_point_is_flagged():
    emap = VARIANTS["exact_arc"]
    with pytest.raises((NewtonDivergence, PointOutsideElement)):
        eval_G(emap, np.array([5.0, -3.0]))


def test_identity_inverse_is_affine_inverse():
    emap = VARIANTS["identity"]
    x = emap.affine(np.array([[0.2, 0.3], [0.6, 0.1]]))
    np.testing.assert_allclose(eval_G(emap, x), (x - emap.affine.b) @ np.linalg.inv(emap.affine.A).T,
                               atol=1e-14)


# -- pull-back and push-forward ----------------------------------------------


def v(x):
    return x[..., 0] ** 2 + x[..., 1]


def grad_v(x):
    return np.stack([2.0 * x[..., 0], np.ones_like(x[..., 1])], axis=-1)


def hess_v(x):
    H = np.zeros(x.shape[:-1] + (2, 2))
    H[..., 0, 0] = 2.0
    return H


def vhat(xh):
    return np.sin(xh[..., 0]) * np.exp(xh[..., 1])


def grad_vhat(xh):
    return np.stack([np.cos(xh[..., 0]) * np.exp(xh[..., 1]), vhat(xh)], axis=-1)


def hess_vhat(xh):
    e = np.exp(xh[..., 1])
    s, c = np.sin(xh[..., 0]), np.cos(xh[..., 0])
    return np.stack([np.stack([-s * e, c * e], -1), np.stack([c * e, s * e], -1)], -2)


@pytest.mark.parametrize("name", list(VARIANTS))
def test_pullback_formulas(name):
    emap = VARIANTS[name]
    xhat = reference_points(100, seed=6)

    def w(p):
        return v(emap(p))

    assert rel_err(pullback_gradient(emap, grad_v, xhat), fd_jacobian(w, xhat, 1e-6)) <= 1e-6
    assert rel_err(pullback_hessian(emap, grad_v, hess_v, xhat), fd_hessian(w, xhat, 1e-4)) <= 1e-4


@pytest.mark.parametrize("name", list(VARIANTS))
def test_pushforward_formulas(name):
    emap = VARIANTS[name]
    x = emap(reference_points(100, seed=7))
    h = emap.size

    def w(p):
        return vhat(emap.inverse(p, check=False))

    assert rel_err(pushforward_gradient(emap, grad_vhat, x), fd_jacobian(w, x, 1e-4 * h)) <= 1e-6
    assert rel_err(pushforward_hessian(emap, grad_vhat, hess_vhat, x), fd_hessian(w, x, 1e-3 * h)) <= 1e-4


# -- transported quantities --------------------------------------------------


def _core_and_correction(name):
    emap = VARIANTS[name]
    p = emap.affine(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    return AffineCore.from_points(p), emap.correction, emap


def test_transported_direction_identity():
    core, corr, emap = _core_and_correction("identity")
    x = emap(reference_points(10, seed=8))
    for i in (1, 2):
        np.testing.assert_allclose(transported_direction(core, corr, i, x),
                                   np.broadcast_to(core.direction(i), x.shape), atol=1e-15)
        assert np.all(curvature_field(core, corr, i, 3 - i, x) == 0.0)


@pytest.mark.parametrize("name", ["exact_arc", "quarter_arc"])
def test_transported_direction_and_curvature(name):
    core, corr, emap = _core_and_correction(name)
    xhat = reference_points(10, seed=9)
    y = emap.affine(xhat)
    x = emap(xhat)
    for i in (1, 2):
        r = core.direction(i)
        tau = transported_direction(core, corr, i, x)
        np.testing.assert_allclose(tau, corr.jacobian(y) @ r, atol=1e-10)
        assert not np.allclose(np.linalg.norm(tau, axis=-1), 1.0)
    b12 = curvature_field(core, corr, 1, 2, x)
    np.testing.assert_array_equal(b12, curvature_field(core, corr, 2, 1, x))
    r1, r2 = core.r1, core.r2
    fd = np.einsum("...mrs,r,s->...m", fd_hessian(corr, y, 1e-4 * core.hT), r1, r2)
    assert rel_err(b12, fd) <= 1e-4


@pytest.mark.parametrize("name", CURVED)
def test_correction_positive_determinant(name):
    emap = VARIANTS[name]
    from curvedfem.quadrature import rule

    y = emap.affine(rule(8).points)
    assert np.all(np.linalg.det(emap.correction.jacobian(y)) > 0.0)


@given(st.floats(0.0, 2 * math.pi), st.floats(0.05, 1.2))
def test_arc_blend_exact_for_any_arc(theta, width):
    ta, tb = theta, theta + width
    a, b = np.array([math.cos(ta), math.sin(ta)]), np.array([math.cos(tb), math.sin(tb)])
    mid = 0.5 * (ta + tb)
    c = 0.3 * np.array([math.cos(mid), math.sin(mid)])
    corr = ArcBlend(a, b, c, ta, tb)
    s = np.linspace(0.0, 1.0, 33)
    assert np.abs(np.linalg.norm(corr.edge_point(s), axis=1) - 1.0).max() <= 1e-12
    np.testing.assert_allclose(corr(c), c, atol=1e-15)
