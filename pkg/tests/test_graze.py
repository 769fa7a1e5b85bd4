import numpy as np
import pytest

from conftest import A411, PERTURBED_PLANARITY
from graze_lab.bodies import SupportBody
from graze_lab.curves import ClosedCurve, fit_plane, hausdorff
from graze_lab.errors import ApexError, InputError
from graze_lab.graze import (
    cone_membership,
    graze_by_angle,
    graze_residual,
    graze_seed,
    graze_tangent,
    line_misses_body,
    omega_is_simple,
    trace_graze,
    trace_omega,
)
from oracles import ellipsoid_graze, ellipsoid_omega, sphere_graze

X2 = np.array([2.0, 0.0, 0.0])
X4 = np.array([4.0, 0.0, 0.0])


def _check_invariants(body, x, g):
    h = body.h(g.normals)
    assert np.max(np.abs(h - g.normals @ x)) < 1e-10
    np.testing.assert_allclose(g.points, body.grad(g.normals), atol=0)
    assert np.all(g.steps >= 1e-4) and np.all(g.steps <= 5e-2 + 1e-12)
    closing = np.arccos(min(1.0, g.normals[-1] @ g.normals[0]))
    assert closing < 2 * 5e-2


def test_seed_ball(ball1):
    u = graze_seed(ball1, X2)
    assert u[0] == pytest.approx(0.5, abs=1e-14)


def test_seed_ellipsoid(ellipsoid):
    # sqrt(4u1^2 + u2^2 + u3^2) = 4 u1 on the sphere gives u1 = 1/sqrt(13)
    u = graze_seed(ellipsoid, X4)
    assert u[0] == pytest.approx(1 / np.sqrt(13), abs=1e-13)


def test_seed_rejects_inner_apex(ball1):
    with pytest.raises(ApexError):
        graze_seed(ball1, [0.5, 0, 0])
    with pytest.raises(ApexError):
        trace_graze(ball1, [1.0 + 1e-9, 0, 0])


def _fine(body, x):
    # uniform 0.02 rad sampling keeps spline interpolation error near 1e-9
    return trace_graze(body, x, 0.02, max_step=0.02)


def test_ball_graze_is_analytic_circle(ball1):
    g = _fine(ball1, X2)
    _check_invariants(ball1, X2, g)
    assert np.max(np.abs(g.points[:, 0] - 0.5)) < 1e-12
    r = np.linalg.norm(g.points[:, 1:], axis=1)
    assert np.max(np.abs(r - np.sqrt(3) / 2)) < 1e-12
    assert hausdorff(g.points, sphere_graze(1.0, X2)) < 1e-8


def test_ellipsoid_graze_polar_plane(ellipsoid):
    g = trace_graze(ellipsoid, X4)
    _check_invariants(ellipsoid, X4, g)
    # polar plane x^T A^-1 p = 1 is p1 = 1 here; the section is a circle of radius sqrt(3)/2
    assert np.max(np.abs(g.points[:, 0] - 1.0)) < 1e-12
    assert np.max(np.abs(np.linalg.norm(g.points[:, 1:], axis=1) - np.sqrt(3) / 2)) < 1e-12


def test_ellipsoid_graze_generic_apex_matches_linear_image(ellipsoid):
    x = np.array([3.0, 3.0, 2.0])
    g = _fine(ellipsoid, x)
    Ainv = np.linalg.inv(A411)
    assert np.max(np.abs(g.points @ Ainv @ x - 1)) < 1e-12
    assert hausdorff(g.points, ellipsoid_graze(A411, x, 2000)) < 1e-8


def test_perturbed_graze_is_not_planar(perturbed):
    g = trace_graze(perturbed, X4, 0.02, max_step=0.02)
    _check_invariants(perturbed, X4, g)
    res = fit_plane(g.points).rms_residual
    assert res > 1e-3
    assert res == pytest.approx(PERTURBED_PLANARITY, rel=1e-9)
    dense = trace_graze(perturbed, X4, 0.005, max_step=0.005)
    assert fit_plane(dense.points).rms_residual == pytest.approx(res, rel=1e-3)


def test_step_bounds(ball1):
    with pytest.raises(InputError):
        trace_graze(ball1, X2, step=0.5)


def test_antipodal_trace_is_negation(perturbed):
    x = np.array([3.0, -2.0, 2.5])
    a = trace_graze(perturbed, x)
    b = trace_graze(perturbed, -x)
    assert len(a) == len(b)
    np.testing.assert_allclose(b.points, -a.points, atol=1e-12)
    np.testing.assert_allclose((-a).points, b.points, atol=1e-12)


def test_graze_tangent_is_curve_tangent(ellipsoid):
    x = np.array([3.0, 3.0, 2.0])
    g = trace_graze(ellipsoid, x, 0.01, max_step=0.01)
    k = 17
    chord = g.points[k + 1] - g.points[k - 1]
    t = graze_tangent(ellipsoid, x, g.normals[k])
    assert np.linalg.norm(np.cross(t, chord / np.linalg.norm(chord))) < 1e-3


def test_cone_membership_ball(ball1):
    g = trace_graze(ball1, X2)
    assert cone_membership(ball1, X2, g, [0, 0, 0]) == pytest.approx(-1.0, abs=1e-14)
    assert cone_membership(ball1, X2, g, X2) == pytest.approx(0.0, abs=1e-14)
    # max over u1 = 1/2 of u.(2,2,0) - 1 is 1 + 2 * sqrt(3)/2 - 1 = sqrt(3)
    assert cone_membership(ball1, X2, g, [2, 2, 0]) == pytest.approx(np.sqrt(3), abs=1e-12)


def test_cone_membership_rejects_foreign_graze(ball1):
    g = trace_graze(ball1, X2)
    with pytest.raises(InputError):
        cone_membership(ball1, np.array([0, 2.0, 0]), g, [0, 0, 0])
    with pytest.raises(InputError):
        cone_membership(SupportBody.ball(1.0, tag="other"), X2, g, [0, 0, 0])


def test_omega_ball_circle(ball1):
    g = _fine(ball1, X2)
    om = trace_omega(ball1, X2, g)
    assert np.max(np.abs(om.points[:, 0])) < 1e-12
    assert np.max(np.abs(np.linalg.norm(om.points, axis=1) - 2 / np.sqrt(3))) < 1e-12
    np.testing.assert_allclose(om.ray_params, 4 / 3, atol=1e-12)
    assert omega_is_simple(om)


def test_omega_ellipsoid_linear_image(ellipsoid):
    g = trace_graze(ellipsoid, X4)
    om = trace_omega(ellipsoid, X4, g)
    assert np.max(np.abs(om.points[:, 0])) < 1e-12
    x = np.array([3.0, 3.0, 2.0])
    om = trace_omega(ellipsoid, x, _fine(ellipsoid, x))
    assert hausdorff(om.points, ellipsoid_omega(A411, x, 2000)) < 1e-8


def test_omega_on_both_cones_and_symmetric(perturbed):
    x = np.array([3.0, 2.0, -2.5])
    gx, gm = _fine(perturbed, x), _fine(perturbed, -x)
    om = trace_omega(perturbed, x, gx)
    for y in om.points[::7]:
        assert abs(cone_membership(perturbed, x, gx, y)) < 1e-8
        assert abs(cone_membership(perturbed, -x, gm, y)) < 1e-8
    assert hausdorff(-om.points, om.points) < 1e-6 * np.ptp(om.points, axis=0).max()
    assert omega_is_simple(om)


def test_omega_rejects_mismatched_apex(ball1):
    g = trace_graze(ball1, X2)
    with pytest.raises(InputError):
        trace_omega(ball1, np.array([3.0, 0, 0]), g)


def test_line_misses_ball(ball1):
    t = line_misses_body(ball1, [0, 2, 0], [1, 2, 0])
    assert t.misses and t.margin == pytest.approx(1.0)
    t = line_misses_body(ball1, [-1, -1, 0], [1, 1, 0])
    assert not t.misses and t.margin == pytest.approx(-1.0)
    t = line_misses_body(ball1, [0, 1, 0], [1, 1, 0])
    assert not t.misses and t.margin == pytest.approx(0.0, abs=1e-15)


def test_line_misses_quadric_agrees_with_search(ellipsoid, perturbed):
    p, q = np.array([3.0, 1.5, 0.5]), np.array([-1.0, 2.0, 1.0])
    exact = line_misses_body(ellipsoid, p, q)
    s = np.linspace(-20, 20, 400001)
    brute = min(ellipsoid.gauge(p + t * (q - p)) for t in s[::100]) - 1
    assert exact.margin == pytest.approx(brute, abs=1e-4)
    assert exact.margin <= brute + 1e-15
    num = line_misses_body(perturbed, p, q)
    near = np.linspace(-0.05, 0.05, 201)
    d = q - p
    s0 = (num.closest - p) @ d / (d @ d)
    assert num.margin <= min(perturbed.gauge(p + (s0 + t) * d) for t in near) - 1 + 1e-12


def test_graze_residual_sign(ball1):
    assert graze_residual(ball1, X2, np.array([1.0, 0, 0])) < 0
    assert graze_residual(ball1, X2, np.array([0, 1.0, 0])) > 0


def test_graze_by_angle_ball():
    g = graze_by_angle(SupportBody.ball(1.0), [2.0, 0, 0], 24)
    np.testing.assert_allclose(g.points[:, 0], 0.5, atol=1e-13)
    np.testing.assert_allclose(np.hypot(g.points[:, 1], g.points[:, 2]), np.sqrt(3) / 2, atol=1e-13)


def test_graze_by_angle_on_graze(perturbed):
    x = np.array([1.0, 3.0, 2.0])
    g = graze_by_angle(perturbed, x, 40)
    res = perturbed.h(g.normals) - g.normals @ x
    assert np.abs(res).max() < 1e-12
    # same curve as the continuation trace
    ref = ClosedCurve(trace_graze(perturbed, x, 0.02, max_step=0.02).points)
    assert ref.distance(g.points).max() < 1e-7
