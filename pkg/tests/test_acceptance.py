"""Acceptance criteria, one test per criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
All tolerances are fixed here; nothing is deferred to calibration.
"""

import json
import time

import numpy as np
import pytest

from conftest import STANDARD_CONFIG, make_config
from stellosc.background import load_model
from stellosc.calculus import AnnulusWindow, BallWindow, random_scalar_field, random_vector_field
from stellosc.cli import main as cli_main
from stellosc.diagnostics import build_phase_profile, compute_sector_angle
from stellosc.exterior_ode import exterior_oracle_error
from stellosc.forms import (
    FormContext,
    check_atmosphere_coercivity,
    check_flow_symmetry,
    check_imaginary_part_identity,
    check_reformulation_identity,
)
from stellosc.radial_solver import (
    Mesh1D,
    ModalSolution,
    RadialBumpSource,
    assemble_coupled,
    assemble_full_gravity,
    assemble_reference,
    reconstruct_exterior_displacement,
    solve,
    zero_source,
)
from stellosc.verification import (
    compare_coupled_reference,
    mms_convergence_study,
    truncation_sweep,
)

SOURCE = RadialBumpSource(1.0, 0.2, 0.8)


def report(num, passed, detail):
    line = f"ACCEPTANCE {num:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line)
    assert passed, line


def _window(rng, region, r_out=3.0):
    if region == "ball":
        return BallWindow(rng.uniform(0.35, 0.58))
    if region == "annulus":
        lo = rng.uniform(0.62, 0.75)
        return AnnulusWindow(lo, rng.uniform(lo + 0.15, 0.98))
    if region == "atmosphere":
        lo = rng.uniform(1.05, 1.5)
        return AnnulusWindow(lo, rng.uniform(lo + 0.5, r_out * 0.93))
    return AnnulusWindow(rng.uniform(0.3, 0.5), rng.uniform(1.3, 2.4))


def test_criterion_1_form_reformulation_identity(standard_model):
    t0 = time.perf_counter()
    ctx = FormContext(standard_model, r_out=3.0)
    rng = np.random.default_rng(101)
    regions = ["ball", "annulus", "atmosphere", "spanning"]
    worst = 0.0
    for k in range(50):
        region = regions[k % 4]
        pair = (random_vector_field(rng, _window(rng, region)), random_scalar_field(rng, _window(rng, region)))
        pair2 = (random_vector_field(rng, _window(rng, region)), random_scalar_field(rng, _window(rng, region)))
        rep = check_reformulation_identity(ctx, pair, pair2, tol_rel=1e-9)
        worst = max(worst, rep.rel_err)
        assert rep.passed, rep.to_dict()
    elapsed = time.perf_counter() - t0
    report(
        1,
        worst <= 1e-9 and elapsed < 60.0,
        f"50 pairs, worst relative error {worst:.2e} (tol 1e-9), {elapsed:.1f}s (< 60s)",
    )


def test_criterion_2_injectivity_identity(standard_model):
    ctx = FormContext(standard_model, r_out=3.0)
    rng = np.random.default_rng(202)
    regions = ["ball", "annulus", "atmosphere", "spanning"]
    worst = 0.0
    for k in range(20):
        u = random_vector_field(rng, _window(rng, regions[k % 4]))
        psi = random_scalar_field(rng, _window(rng, regions[k % 4]))
        rep = check_imaginary_part_identity(ctx, u, psi, tol_rel=1e-9)
        assert rep.passed, rep.to_dict()
        worst = max(worst, rep.rel_err)
    report(2, worst <= 1e-9, f"20 fields, worst |Im a + w<gamma u,u>| / (|w|<gamma u,u>) = {worst:.2e}")


def test_criterion_3_flow_symmetry(flow_model):
    ctx = FormContext(flow_model, r_out=3.0)
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(5):
        u = random_vector_field(rng, _window(rng, "ball"))
        u2 = random_vector_field(rng, _window(rng, "ball"))
        rep = check_flow_symmetry(ctx, u, u2, tol_rel=1e-9)
        assert rep.extra["solenoidal"]
        assert rep.passed, rep.to_dict()
        worst = max(worst, rep.rel_err)
    report(3, worst <= 1e-9, f"toroidal flow, worst pairing mismatch {worst:.2e} (tol 1e-9)")


def test_criterion_4_atmosphere_coercivity(standard_model):
    ctx = FormContext(standard_model, r_out=3.0)
    rng = np.random.default_rng(404)
    gamma_min, cs_min = 0.1, 1.0
    floor = 0.1 * min(gamma_min * abs(standard_model.omega), cs_min**2)
    worst = np.inf
    for _ in range(20):
        u = random_vector_field(rng, _window(rng, "atmosphere"))
        rep = check_atmosphere_coercivity(ctx, u)
        worst = min(worst, rep["margin"])
    report(
        4,
        worst >= floor,
        f"20 atmosphere fields, worst rotated-coercivity margin {worst:.3f} >= {floor:.3f}",
    )


def test_criterion_5_mms_convergence_and_oracle(standard_model):
    t0 = time.perf_counter()
    study = mms_convergence_study(standard_model, [(16, 32), (32, 64), (64, 128), (128, 256)], R_ext=3.0)
    rates = [row["rate"] for key in ("u", "v") for row in study[key] if row["rate"] is not None]
    rates_ok = all(abs(r - 2.0) <= 0.3 for r in rates)

    meshes = (
        Mesh1D.uniform(0.0, 1.0, 500, interface=1.0),
        Mesh1D.uniform(1.0, 3.0, 1000, interface=1.0),
    )
    sol = solve(assemble_coupled(standard_model, *meshes, SOURCE))
    oracle = exterior_oracle_error(standard_model, sol)
    elapsed = time.perf_counter() - t0
    report(
        5,
        rates_ok and oracle["rel_l2"] <= 1e-6 and elapsed < 120.0,
        f"L2 rates {['%.2f' % r for r in rates]} (2.0 +/- 0.3); shooting-oracle "
        f"mismatch {oracle['rel_l2']:.2e} (tol 1e-6) at 10^3 elements; {elapsed:.1f}s (< 120s)",
    )


def test_criterion_6_coupled_vs_reference(standard_model):
    res = compare_coupled_reference(standard_model, SOURCE, 160, 900, 7.0)
    agree = res["rel_l2_interior"] <= 1e-3
    rows = truncation_sweep(standard_model, SOURCE, 80, [2.0, 3.0, 4.0, 5.0], elements_per_unit=80)
    diffs = [row["rel_l2_interior"] for row in rows]
    monotone = all(diffs[k] < diffs[k - 1] for k in range(1, len(diffs)))
    report(
        6,
        agree and monotone,
        f"interior rel L2 difference {res['rel_l2_interior']:.2e} (tol 1e-3) at R=7; "
        f"R-sweep {['%.1e' % d for d in diffs]} monotone decreasing",
    )


def test_criterion_7_zero_solutions(standard_model):
    meshes = (
        Mesh1D.uniform(0.0, 1.0, 32, interface=1.0),
        Mesh1D.uniform(1.0, 3.0, 64, interface=1.0),
    )
    full_mesh = Mesh1D.uniform(0.0, 3.0, 96)
    systems = {
        "coupled": assemble_coupled(standard_model, *meshes, zero_source),
        "reference": assemble_reference(standard_model, full_mesh, zero_source, R=3.0),
        "full-gravity": assemble_full_gravity(standard_model, full_mesh, zero_source, R=3.0),
    }
    worst = 0.0
    for name, system in systems.items():
        sol = solve(system)
        scale = float(np.max(np.abs(system.matrix.data)))
        norm = float(np.max(np.abs(sol.coefficients))) if sol.coefficients.size else 0.0
        worst = max(worst, norm / scale)
    report(7, worst <= 1e-10, f"zero sources: worst |solution|/matrix-scale = {worst:.2e} (tol 1e-10)")


def test_criterion_8_diagnostics_closed_forms():
    psd_model = load_model(
        make_config(
            p={"kind": "constant", "value": 1.0},
            phi={"kind": "polynomial", "coeffs": [0.0, 0.0, 0.5]},
        )
    )
    theta_psd = compute_sector_angle(psd_model, n_radial=400)

    scalar_model = load_model(
        make_config(
            omega=1.0,
            gamma={"kind": "constant", "value": 1.0},
            p={"kind": "constant", "value": 1.0},
            phi={"kind": "polynomial", "coeffs": [0.0, 0.0, -0.5]},
        )
    )
    theta_scalar = compute_sector_angle(scalar_model, n_radial=400)

    prof1 = build_phase_profile("one-region", 0.6, 1.0, plateau=np.pi / 2)
    prof2 = build_phase_profile(
        "two-region", 0.6, 1.0, r3=1.4, plateau=0.5, interface_value=np.pi / 2 - 0.3
    )
    scans = prof1.check_properties(10_000), prof2.check_properties(10_000)
    ok = (
        theta_psd <= 1e-10
        and abs(theta_scalar - np.pi / 4) <= 1e-10
        and all(s["all_pass"] for s in scans)
    )
    report(
        8,
        ok,
        f"theta(psd)={theta_psd:.1e} (=0), theta(scalar)={theta_scalar:.12f} (=pi/4 to 1e-10); "
        f"phase profiles: 10^4-point scans, zero violations",
    )


def test_criterion_9_interface_reconstruction(standard_model):
    study = mms_convergence_study(standard_model, [(32, 64), (64, 128), (128, 256)], R_ext=3.0)
    flux_rates = [r["rate"] for r in study["interface_flux"] if r["rate"] is not None]
    div_rates = [r["rate"] for r in study["interface_divergence"] if r["rate"] is not None]
    rates_ok = all(r >= 1.0 for r in flux_rates + div_rates)

    nodes = np.linspace(1.0, 3.0, 33)
    const_sol = ModalSolution(
        system=None,
        coefficients=None,
        residual=0.0,
        pivot_min=1.0,
        pivot_ratio=1.0,
        warnings=[],
        nodal={"u": (np.linspace(0, 1, 5), np.zeros(5, dtype=complex)),
               "v": (nodes, np.full(nodes.size, 1.5 - 0.5j))},
    )
    ext = reconstruct_exterior_displacement(standard_model, const_sol)
    const_ok = float(np.max(np.abs(ext(np.linspace(1.0, 3.0, 100))))) == 0.0
    report(
        9,
        rates_ok and const_ok,
        f"interface residual rates flux={['%.2f' % r for r in flux_rates]}, "
        f"div={['%.2f' % r for r in div_rates]} (>= 1); constant potential reconstructs u = 0 exactly",
    )


def test_criterion_10_determinism(tmp_path):
    model_path = tmp_path / "model.json"
    model_path.write_text(json.dumps(STANDARD_CONFIG))
    configs = {
        "solve.json": {
            "model_path": "model.json",
            "formulation": "coupled",
            "mesh": {"n_int": 24, "n_ext": 48, "R_ext": 3.0},
            "source": {"kind": "radial-bump", "amplitude": 1.0, "r_lo": 0.2, "r_hi": 0.8},
        },
        "verify.json": {
            "model_path": "model.json",
            "r_out": 3.0,
            "n_pairs": 2,
            "n_imaginary": 1,
            "n_coercivity": 1,
        },
        "diag.json": {"model_path": "model.json", "n_radial": 80, "n_angles": 1000},
        "check.json": {"model_path": "model.json", "validation": {"n_radial": 2000}},
        "cmp.json": {
            "model_path": "model.json",
            "source": {"kind": "radial-bump", "amplitude": 1.0, "r_lo": 0.2, "r_hi": 0.8},
            "n_int": 24,
            "elements_per_unit": 24,
            "R_list": [2.0, 3.0],
        },
    }
    commands = [
        ("solve", "solve.json", ["solution.csv", "residuals.json"]),
        ("verify-forms", "verify.json", ["verify_forms.json"]),
        ("diagnostics", "diag.json", ["certificate.json", "certificate.txt"]),
        ("check-model", "check.json", ["check_model.json", "check_model.txt"]),
        ("compare", "cmp.json", ["compare.json", "compare.csv"]),
    ]
    for name, payload in configs.items():
        (tmp_path / name).write_text(json.dumps(payload))
    mismatches = []
    for command, cfg, outputs in commands:
        dirs = []
        for tag in ("run1", "run2"):
            out = tmp_path / f"{command}-{tag}"
            code = cli_main(
                [command, "--config", str(tmp_path / cfg), "--out", str(out), "--seed", "3", "--no-figures"]
            )
            assert code == 0
            dirs.append(out)
        for fname in outputs:
            if (dirs[0] / fname).read_bytes() != (dirs[1] / fname).read_bytes():
                mismatches.append(f"{command}/{fname}")
    report(
        10,
        not mismatches,
        "two consecutive runs byte-identical"
        + ("" if not mismatches else f"; mismatches: {mismatches}"),
    )
