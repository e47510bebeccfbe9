"""Quadrature exactness and analytic-derivative consistency of test fields."""

import math

import numpy as np
import pytest

from stellosc.calculus import (
    AnnulusWindow,
    BallWindow,
    PlateauWindow,
    Polynomial3,
    ScalarTestField,
    VectorTestField,
    annulus_rule,
    ball_rule,
    directional_derivative,
    integrate,
    radial_vector_field,
    random_scalar_field,
    random_vector_field,
    sphere_rule,
)
from stellosc.flows import ConstantFlow, ToroidalFlow, ZeroFlow
from stellosc.profiles import constant_profile


def fd4_directional(f, pts, axis, h):
    """4th-order central difference of f along a coordinate axis."""
    e = np.zeros(3)
    e[axis] = h
    return (-f(pts + 2 * e) + 8 * f(pts + e) - 8 * f(pts - e) + f(pts - 2 * e)) / (12 * h)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def test_ball_volume():
    rule = ball_rule(1.0)
    val = integrate(rule, lambda pts: np.ones(pts.shape[0]))
    assert abs(val - 4 * math.pi / 3) < 1e-12


def test_annulus_volume():
    rule = annulus_rule(1.0, 2.0)
    val = integrate(rule, lambda pts: np.ones(pts.shape[0]))
    assert abs(val - 4 * math.pi * 7 / 3) < 1e-11


def test_second_moment():
    # int_{B_1} x1^2 dx = 4 pi / 15 (closed-form moment integral)
    rule = ball_rule(1.0)
    val = integrate(rule, lambda pts: pts[:, 0] ** 2)
    assert abs(val - 4 * math.pi / 15) < 1e-13


def test_odd_moment_vanishes():
    rule = ball_rule(1.0)
    val = integrate(rule, lambda pts: pts[:, 0] * pts[:, 2] ** 2)
    assert abs(val) < 1e-14


def test_degree_20_spherical_polynomial_exact():
    # int_{B_1} x3^20 dx = (1/23) * 2 pi * 2/21 = 4 pi / 483
    rule = ball_rule(1.0)
    val = integrate(rule, lambda pts: pts[:, 2] ** 20)
    assert abs(val - 4 * math.pi / 483) < 1e-14 * 483


def test_sphere_surface_area():
    rule = sphere_rule(1.5)
    val = integrate(rule, lambda pts: np.ones(pts.shape[0]))
    assert abs(val - 4 * math.pi * 1.5**2) < 1e-11


def test_order_doubling_stability(rng):
    # quadrature of a smooth bump integrand must be stable under order
    # doubling: relative change <= 1e-9 at the default orders
    field = random_scalar_field(rng, AnnulusWindow(0.5, 1.8), degree=2)
    rule = annulus_rule(0.4, 2.0)
    fine = rule.refined(2)

    def integrand(pts):
        return np.abs(field.value(pts)) ** 2

    coarse_val = integrate(rule, integrand)
    fine_val = integrate(fine, integrand)
    assert abs(coarse_val - fine_val) <= 1e-9 * abs(fine_val)


# ---------------------------------------------------------------------------
# test fields
# ---------------------------------------------------------------------------

def _random_points_in_support(rng, support, n=100, trim=0.12):
    # stay away from the extreme support edges: the bump's high-order
    # derivatives blow up there, which ruins the FD *oracle*, not the field
    lo, hi = support
    width = hi - lo
    lo = max(lo + trim * width, 1e-3)
    hi = hi - trim * width
    r = rng.uniform(lo, hi, n)
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    s = np.sqrt(1 - z**2)
    return r[:, None] * np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


@pytest.mark.parametrize(
    "window",
    [BallWindow(1.2), AnnulusWindow(0.7, 1.9), PlateauWindow(0.9, 1.6)],
    ids=["ball", "annulus", "plateau"],
)
def test_scalar_gradient_matches_fd(rng, window):
    field = random_scalar_field(rng, window, degree=2)
    pts = _random_points_in_support(rng, window.support)
    grad = field.grad(pts)
    h = 2e-3
    for ax in range(3):
        fd = fd4_directional(field.value, pts, ax, h)
        scale = max(1.0, float(np.max(np.abs(grad))))
        assert np.max(np.abs(grad[:, ax] - fd)) < max(1e-8, 1e-6 * scale)


@pytest.mark.parametrize(
    "window",
    [BallWindow(1.2), AnnulusWindow(0.7, 1.9)],
    ids=["ball", "annulus"],
)
def test_scalar_hessian_matches_fd(rng, window):
    field = random_scalar_field(rng, window, degree=2)
    pts = _random_points_in_support(rng, window.support)
    hess = field.hess(pts)
    h = 2e-3
    for ax in range(3):
        fd = fd4_directional(field.grad, pts, ax, h)
        scale = max(1.0, float(np.max(np.abs(hess))))
        assert np.max(np.abs(hess[:, :, ax] - fd)) < max(1e-7, 1e-6 * scale)


def test_hessian_trace_is_laplacian(rng):
    field = random_scalar_field(rng, BallWindow(1.5), degree=3)
    pts = _random_points_in_support(rng, field.support)
    tr = field.hess(pts)[:, 0, 0] + field.hess(pts)[:, 1, 1] + field.hess(pts)[:, 2, 2]
    lap = field.laplacian(pts)
    scale = max(1.0, float(np.max(np.abs(lap))))
    assert np.max(np.abs(tr - lap)) < 1e-12 * scale


def test_vector_jacobian_and_div(rng):
    field = random_vector_field(rng, AnnulusWindow(0.6, 1.4), degree=2)
    pts = _random_points_in_support(rng, field.support)
    jac = field.jacobian(pts)
    h = 2e-3
    scale = max(1.0, float(np.max(np.abs(jac))))
    for ax in range(3):
        fd = fd4_directional(field.value, pts, ax, h)
        assert np.max(np.abs(jac[:, :, ax] - fd)) < max(1e-8, 1e-6 * scale)
    div = field.div(pts)
    assert np.max(np.abs(div - (jac[:, 0, 0] + jac[:, 1, 1] + jac[:, 2, 2]))) < 1e-13


def test_curl_matches_fd(rng):
    field = random_vector_field(rng, BallWindow(1.0), degree=2)
    pts = _random_points_in_support(rng, (0.1, 0.95))
    curl = field.curl(pts)
    h = 2e-3
    d = [fd4_directional(field.value, pts, ax, h) for ax in range(3)]
    fd_curl = np.stack(
        [d[1][:, 2] - d[2][:, 1], d[2][:, 0] - d[0][:, 2], d[0][:, 1] - d[1][:, 0]],
        axis=1,
    )
    scale = max(1.0, float(np.max(np.abs(curl))))
    assert np.max(np.abs(curl - fd_curl)) < max(1e-8, 1e-6 * scale)


def test_fields_vanish_outside_support(rng):
    field = random_scalar_field(rng, AnnulusWindow(0.8, 1.2), degree=2)
    pts = np.array([[0.0, 0.0, 0.5], [1.5, 0.0, 0.0], [0.0, 2.0, 1.0]])
    assert np.all(field.value(pts) == 0)
    assert np.all(field.grad(pts) == 0)
    assert np.all(field.hess(pts) == 0)


def test_field_smooth_at_origin(rng):
    field = random_scalar_field(rng, BallWindow(1.0), degree=2)
    origin = np.zeros((1, 3))
    for arr in (field.value(origin), field.grad(origin), field.hess(origin)):
        assert np.all(np.isfinite(arr))
    # Hessian at the origin must agree with nearby finite differences
    h = 1e-3
    fd = fd4_directional(field.grad, origin, 0, h)
    assert np.max(np.abs(field.hess(origin)[:, :, 0] - fd)) < 1e-6


# ---------------------------------------------------------------------------
# directional derivative
# ---------------------------------------------------------------------------

def test_directional_derivative_product_rule(rng):
    # b = e1 constant, u = x1 * bump: (b.grad) u = bump + x1 * d(bump)/dx1
    window = BallWindow(1.0)
    u = ScalarTestField(Polynomial3({(1, 0, 0): 1.0}), window)
    flow = ConstantFlow([1.0, 0.0, 0.0])
    dd = directional_derivative(u, flow)
    pts = _random_points_in_support(rng, (0.05, 0.9))
    r = np.linalg.norm(pts, axis=1)
    expected = window.value(r) + pts[:, 0] ** 2 * window.d1_over_r(r)
    assert np.max(np.abs(dd.value(pts) - expected)) < 1e-12
    # and against finite differences
    fd = fd4_directional(u.value, pts, 0, 2e-3)
    assert np.max(np.abs(dd.value(pts) - fd)) < 1e-7


def test_directional_derivative_zero_flow(rng):
    u = random_vector_field(rng, BallWindow(1.0))
    dd = directional_derivative(u, ZeroFlow())
    pts = _random_points_in_support(rng, (0.1, 0.9))
    assert np.max(np.abs(dd.value(pts))) == 0.0


def test_directional_derivative_constant_field_in_flow_support():
    # constant vector inside the flow ball: jacobian vanishes there
    window = PlateauWindow(0.7, 1.5)
    comps = [ScalarTestField(Polynomial3.constant(c), window) for c in (1.0, -2.0, 0.5)]
    u = VectorTestField(comps)
    flow = ToroidalFlow(0.3, 0.1, 0.6, constant_profile(1.0))
    dd = directional_derivative(u, flow)
    rng = np.random.default_rng(0)
    pts = _random_points_in_support(rng, (0.15, 0.55))
    assert np.max(np.abs(dd.value(pts))) < 1e-14


def test_radial_vector_field_divergence(rng):
    # u = w(r) x has div u = 3 w + r w'
    window = AnnulusWindow(0.5, 1.5)
    u = radial_vector_field(window, coeff=2.0)
    pts = _random_points_in_support(rng, window.support)
    r = np.linalg.norm(pts, axis=1)
    expected = 2.0 * (3.0 * window.value(r) + r * window.d1(r))
    assert np.max(np.abs(u.div(pts) - expected)) < 1e-12
