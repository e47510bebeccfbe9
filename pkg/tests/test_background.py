"""Background model loading, derived coefficients, and assumption checks."""

import math

import numpy as np
import pytest

from conftest import make_config
from stellosc.background import derived_coefficients, load_model, validate_assumptions
from stellosc.errors import ConfigError
from stellosc.profiles import (
    ExponentialProfile,
    PolynomialProfile,
    TabulatedProfile,
    profile_from_config,
)


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

def test_exponential_profile_evaluation():
    prof = ExponentialProfile(1.0, 1.0)
    assert abs(prof.value(2.0) - math.exp(-2.0)) < 1e-15
    assert abs(prof.d1(2.0) + math.exp(-2.0)) < 1e-15
    assert abs(prof.d2(2.0) - math.exp(-2.0)) < 1e-15


def test_tabulated_linear_interpolation():
    prof = TabulatedProfile([1.0, 2.0, 3.0], [3.0, 2.0, 1.0], order=1)
    assert prof.value(1.5) == 2.5
    assert prof.d1(1.5) == -1.0
    assert prof.d2(1.5) == 0.0
    assert not prof.d2_trusted


def test_tabulated_pchip_no_overshoot():
    # monotone data must stay monotone under monotone cubic interpolation
    grid = np.linspace(0.0, 2.0, 9)
    vals = np.exp(-grid)
    prof = TabulatedProfile(grid, vals, order=3)
    fine = np.linspace(0.0, 2.0, 500)
    assert np.all(np.diff(prof.value(fine)) < 0)


def test_tabulated_grid_must_increase():
    with pytest.raises(ConfigError, match="strictly increasing"):
        TabulatedProfile([0.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_profile_from_csv(tmp_path):
    path = tmp_path / "rho.csv"
    path.write_text("# radius, density\n0.0, 1.0\n1.0, 0.5\n2.0, 0.25\n")
    prof = profile_from_config({"kind": "tabulated", "csv": "rho.csv", "order": 1}, str(tmp_path))
    assert prof.value(0.5) == 0.75


# ---------------------------------------------------------------------------
# model loading
# ---------------------------------------------------------------------------

def test_load_exponential_atmosphere():
    model = load_model(make_config(rho={"kind": "exponential", "C": 1.0, "alpha": 1.0}))
    assert abs(model.rho.value(2.0) - math.exp(-2.0)) < 1e-15


def test_radii_unordered_rejected():
    with pytest.raises(ConfigError, match="radii unordered"):
        load_model(make_config(r1=2.0, r2=1.0))


def test_missing_field_rejected():
    cfg = make_config()
    del cfg["gamma"]
    with pytest.raises(ConfigError, match="missing fields: gamma"):
        load_model(cfg)


def test_negative_density_rejected():
    with pytest.raises(ConfigError, match="negative density"):
        load_model(make_config(rho={"kind": "polynomial", "coeffs": [1.0, -1.0]}))


def test_malformed_json_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed JSON"):
        load_model(str(path))


def test_flow_support_must_fit_inner_ball():
    with pytest.raises(ConfigError, match="flow support"):
        load_model(make_config(b={"kind": "toroidal", "amplitude": 0.1, "r_lo": 0.1, "r_hi": 0.9}))


# ---------------------------------------------------------------------------
# derived coefficients
# ---------------------------------------------------------------------------

def test_pressure_gradient_constant_for_matched_exponentials():
    # p = p0 e^{-a r}, rho = rho0 e^{-a r}, c_s const:
    # q_r = -a p0 / (c_s^2 rho0), independent of r (closed-form differentiation)
    p0, rho0, cs, a = 2.0, 0.7, 1.2, 1.5
    model = load_model(
        make_config(
            rho={"kind": "exponential", "C": rho0, "alpha": a},
            p={"kind": "exponential", "C": p0, "alpha": a},
            cs={"kind": "constant", "value": cs},
            phi={"kind": "constant", "value": 0.0},
        )
    )
    expected = -a * p0 / (cs**2 * rho0)
    for r in (0.3, 1.0, 2.5):
        assert abs(model.q_r(r) - expected) < 1e-14
    sample = derived_coefficients(model, 1.3)
    assert np.allclose(sample.q, [0.0, 0.0, expected], atol=1e-14)


def test_constant_pressure_gives_pure_potential_curvature(rng):
    # p const: q = 0, hess p = 0, m1 reduces to hess(phi)
    model = load_model(
        make_config(
            p={"kind": "constant", "value": 1.0},
            phi={"kind": "polynomial", "coeffs": [0.0, 0.0, 0.25]},
        )
    )
    r = 1.7
    sample = derived_coefficients(model, r)
    assert np.allclose(sample.q, 0.0)
    phi_rr = model.phi.d2(r)
    phi_tt = model.phi.d1(r) / r
    assert abs(sample.m1_rr - phi_rr) < 1e-14
    assert abs(sample.m1_tt - phi_tt) < 1e-14


def test_m2_minus_m1_without_rotation(standard_model):
    sample = derived_coefficients(standard_model, 0.8)
    diff = sample.m2 - sample.m1
    assert np.allclose(diff, standard_model.omega**2 * np.eye(3), atol=1e-15)


def test_m2_hermitian_with_rotation(rotating_model):
    sample = derived_coefficients(rotating_model, np.array([0.3, -0.4, 0.5]))
    m2 = sample.m2
    assert np.max(np.abs(m2 - m2.conj().T)) < 1e-14
    # independent oracle: (w I + i C)^H (w I + i C) added to m1
    C = rotating_model.rotation_matrix()
    op = rotating_model.omega * np.eye(3) + 1j * C
    assert np.allclose(m2 - sample.m1, op.conj().T @ op, atol=1e-13)


def test_m1_symmetric_and_eigenstructure(standard_model):
    model = load_model(make_config(phi={"kind": "polynomial", "coeffs": [0.0, 0.0, 0.3]}))
    x = np.array([0.6, -0.2, 1.1])
    sample = derived_coefficients(model, x)
    m1 = sample.m1
    assert np.max(np.abs(m1 - m1.T)) < 1e-13
    # radial eigenvalue: action on x^ reproduces m1_rr x^ to 1e-10
    xhat = x / np.linalg.norm(x)
    assert np.max(np.abs(m1 @ xhat - sample.m1_rr * xhat)) < 1e-10
    # tangential: any vector orthogonal to x^
    t = np.cross(xhat, [0.0, 0.0, 1.0])
    t /= np.linalg.norm(t)
    assert np.max(np.abs(m1 @ t - sample.m1_tt * t)) < 1e-10


def test_radial_hessian_identity_against_fd():
    # hess of the 3d function p(|x|) has radial eigenvalue p'' and
    # tangential eigenvalue p'/r; checked against 4th-order differences
    model = load_model(make_config())
    x = np.array([0.5, 0.9, -0.3])
    fields = model.fields_at(x[None, :])
    hess = fields["hess_p"][0]

    def p_of(pts):
        return model.p.value(np.linalg.norm(pts, axis=1))

    h = 1e-3
    fd = np.zeros((3, 3))
    for a in range(3):
        for b in range(3):
            ea, eb = np.zeros(3), np.zeros(3)
            ea[a], eb[b] = h, h

            def dd(shift_a, shift_b):
                return p_of((x + shift_a * ea + shift_b * eb)[None, :])[0]

            fd[a, b] = (
                dd(1, 1) - dd(1, -1) - dd(-1, 1) + dd(-1, -1)
            ) / (4 * h * h)
    assert np.max(np.abs(hess - fd)) < 1e-6


# ---------------------------------------------------------------------------
# scale exponent (eta)
# ---------------------------------------------------------------------------

def test_scale_exponent_vanishes_at_interface(standard_model):
    assert standard_model.scale_exponent(standard_model.r2) == 0.0


def test_scale_exponent_constant_integrand(standard_model):
    # q_r = -3 for the matched exponential model: eta(r) = -3 (r - r2)
    for r in (1.2, 1.9, 2.7):
        assert abs(standard_model.scale_exponent(r) + 3.0 * (r - standard_model.r2)) < 1e-12


def test_scale_exponent_requires_atmosphere_radius(standard_model):
    with pytest.raises(ValueError, match="r >= r2"):
        standard_model.scale_exponent(0.5)


def test_scale_exponent_against_trapezoid():
    # independent fine-trapezoid oracle on a model with varying q_r
    model = load_model(
        make_config(
            cs={"kind": "polynomial", "coeffs": [1.0, 0.2]},
            p={"kind": "exponential", "C": 1.5, "alpha": 2.0},
            phi={"kind": "constant", "value": 0.0},
        )
    )
    for r in (1.3, 2.2, 2.9):
        val = model.scale_exponent(r)
        rs = np.linspace(model.r2, r, 100_001)
        oracle = np.trapezoid(model.q_r(rs), rs)
        assert abs(val - oracle) <= 1e-8 * (1.0 + abs(val))


def test_scale_exponent_derivative_is_q(standard_model):
    model = load_model(
        make_config(
            cs={"kind": "polynomial", "coeffs": [1.0, 0.15]},
        )
    )
    h = 1e-4
    for r in (1.4, 2.1):
        fd = (model.scale_exponent(r + h) - model.scale_exponent(r - h)) / (2 * h)
        assert abs(fd - model.q_r(r)) < 1e-7


def test_scale_exponent_many_matches_scalar(standard_model):
    rs = np.array([2.3, 1.0, 1.7, 2.9, 1.1])
    many = standard_model.scale_exponent_many(rs)
    single = np.array([standard_model.scale_exponent(r) for r in rs])
    assert np.max(np.abs(many - single)) < 1e-12


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------

def test_validate_standard_model_all_pass(standard_model):
    report = validate_assumptions(standard_model, n_radial=2000)
    assert report.passed
    names = [e.name for e in report.entries]
    assert "subsonic flow condition" in names
    assert report.sampling["n_radial"] == 2000
    # serialization round-trip stays structured
    d = report.to_dict()
    assert d["passed"] is True
    assert "value" in d["entries"][0]
    assert "PASS" in report.to_table()


def test_validate_zero_damping_fails():
    model = load_model(make_config(gamma={"kind": "constant", "value": 0.0}))
    report = validate_assumptions(model, n_radial=500)
    assert not report.passed
    entry = next(e for e in report.entries if e.name == "damping lower bound")
    assert not entry.passed


def test_validate_zero_flow_subsonic_margin(standard_model):
    # with b = 0 and sector angle theta = 0 the margin is the full bound 1
    report = validate_assumptions(standard_model, n_radial=500)
    entry = next(e for e in report.entries if e.name == "subsonic flow condition")
    assert entry.passed
    assert abs(entry.margin - 1.0) < 1e-12


def test_validate_omega_zero_flags_subsonic():
    model = load_model(make_config(omega=0.0))
    report = validate_assumptions(model, n_radial=500)
    entry = next(e for e in report.entries if e.name == "subsonic flow condition")
    assert not entry.passed
    assert "omega = 0" in entry.details


def test_validate_hydrostatic_entry_is_informational(standard_model):
    report = validate_assumptions(standard_model, n_radial=500)
    entry = next(e for e in report.entries if "hydrostatic" in e.name)
    assert not entry.blocking
    # the aligned standard model satisfies grad p = rho grad phi exactly
    assert entry.value < 1e-10


def test_validate_low_trust_tabulated():
    grid = np.linspace(0.0, 3.0, 40)
    model = load_model(
        make_config(rho={"kind": "tabulated", "r": list(grid), "values": list(np.exp(-3 * grid))})
    )
    report = validate_assumptions(model, n_radial=500)
    entry = next(e for e in report.entries if "low-trust" in e.name)
    assert "rho" in entry.details
