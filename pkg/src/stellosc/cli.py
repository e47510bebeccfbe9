"""Batch command-line front-end.

Subcommands:

* ``check-model``   -- load a model, run the assumption checks plus the
  sector-angle/subsonic diagnostics; exit 0 iff all blocking checks pass.
* ``verify-forms``  -- quadrature identity suite (form reformulation,
  imaginary-part sign, flow symmetry, atmosphere coercivity).
* ``solve``         -- assemble and solve one scenario (coupled,
  reference, full-gravity, or an mms convergence study); writes the
  solution CSV, residual JSON, and figures.
* ``compare``       -- coupled-vs-reference cross-validation over a
  truncation radius sweep.
* ``diagnostics``   -- sector angle, rotation angles, phase profiles,
  pointwise sector check; writes a certificate.

Exit codes: 0 = pass, 1 = domain-check failure, 2 = usage/IO error.
Every run writes a manifest next to its outputs; with a fixed seed,
re-running a config reproduces the CSV and report files byte for byte
(the manifest records wall-clock time and is exempt).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .background import load_model, validate_assumptions
from .calculus import AnnulusWindow, BallWindow, random_scalar_field, random_vector_field
from .diagnostics import (
    build_phase_profile,
    check_subsonic,
    pointwise_sector_check,
    sector_angle_report,
    select_rotation_angle,
)
from .errors import ConfigError, SolverError
from .exterior_ode import exterior_oracle_error
from .forms import (
    FormContext,
    check_atmosphere_coercivity,
    check_flow_symmetry,
    check_imaginary_part_identity,
    check_reformulation_identity,
)
from .radial_solver import (
    Mesh1D,
    RadialBumpSource,
    assemble_coupled,
    assemble_full_gravity,
    assemble_reference,
    interface_residuals,
    reconstruct_exterior_displacement,
    solve as solve_system,
    zero_source,
)
from .reporting import RunManifest, Stopwatch, jsonable, write_json
from .verification import (
    estimate_truncation_decay,
    mms_convergence_study,
    truncation_sweep,
)

# identity residuals below this are quadrature-floor effects, not
# violations; used to classify failures under user-tightened tolerances
_ACHIEVABLE_REL = 1e-9


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _model_from(cfg, config_path):
    base = os.path.dirname(os.path.abspath(config_path))
    if "model_path" in cfg:
        path = cfg["model_path"]
        if not os.path.isabs(path):
            path = os.path.join(base, path)
        return load_model(path)
    if "model" in cfg:
        return load_model(cfg["model"], base_dir=base)
    # a bare model document is also accepted
    return load_model(cfg, base_dir=base)


def _source_from(doc):
    if doc is None or doc.get("kind") == "zero":
        return zero_source
    if doc.get("kind") == "radial-bump":
        amp = doc.get("amplitude", 1.0)
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        return RadialBumpSource(amp, doc["r_lo"], doc["r_hi"])
    raise ConfigError(f"unknown source kind {doc.get('kind')!r}")


def _write_csv(path, rows, header):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _solution_csv(path, solution, extra=None):
    rows = []
    for name in ("u", "v", "psi"):
        if name not in solution.nodal:
            continue
        nodes, vals = solution.nodal[name]
        for r, z in zip(nodes, vals):
            rows.append(f"{name},{r:.16e},{z.real:.16e},{z.imag:.16e}")
    for name, pairs in (extra or {}).items():
        for r, z in pairs:
            rows.append(f"{name},{r:.16e},{z.real:.16e},{z.imag:.16e}")
    _write_csv(path, rows, "field,r,re,im")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_check_model(cfg, config_path, out, seed):
    model = _model_from(cfg, config_path)
    val = cfg.get("validation", {}) if isinstance(cfg.get("validation"), dict) else {}
    report = validate_assumptions(
        model, n_radial=int(val.get("n_radial", 10_000)), r_max=val.get("r_max")
    )
    outputs = []
    path = os.path.join(out, "check_model.json")
    write_json(path, report.to_dict())
    outputs.append(path)
    table = os.path.join(out, "check_model.txt")
    with open(table, "w") as fh:
        fh.write(report.to_table() + "\n")
    outputs.append(table)
    print(report.to_table())
    return (0 if report.passed else 1), outputs, {"model": model.name}


def _identity_entries(model, cfg, seed):
    rng = np.random.default_rng(seed)
    r_out = float(cfg.get("r_out", model.r_max))
    tol = float(cfg.get("tolerance", 1e-9))
    ctx = FormContext(model, r_out=r_out)
    entries = []

    def classify(rep):
        d = rep.to_dict()
        if rep.passed:
            d["category"] = "pass"
        elif rep.rel_err <= _ACHIEVABLE_REL:
            d["category"] = "tolerance"
        else:
            d["category"] = "identity"
        return d

    def window(region):
        if region == "ball":
            return BallWindow(rng.uniform(0.35, 0.95) * model.r1)
        if region == "annulus":
            lo = rng.uniform(model.r1 * 1.03, model.r1 * 1.2)
            return AnnulusWindow(lo, rng.uniform(lo + 0.15, model.r2 * 0.98))
        if region == "atmosphere":
            lo = rng.uniform(model.r2 * 1.05, model.r2 * 1.5)
            return AnnulusWindow(lo, rng.uniform(lo + 0.5, r_out * 0.95))
        return AnnulusWindow(rng.uniform(0.3, 0.5) * model.r1, rng.uniform(0.5, 0.9) * r_out)

    regions = ["ball", "annulus", "atmosphere", "spanning"]
    n_pairs = int(cfg.get("n_pairs", 8))
    for k in range(n_pairs):
        region = regions[k % len(regions)]
        pair = (random_vector_field(rng, window(region)), random_scalar_field(rng, window(region)))
        pair2 = (random_vector_field(rng, window(region)), random_scalar_field(rng, window(region)))
        rep = check_reformulation_identity(ctx, pair, pair2, tol_rel=tol)
        rep.extra["region"] = region
        entries.append(classify(rep))

    for k in range(int(cfg.get("n_imaginary", 4))):
        region = regions[k % len(regions)]
        rep = check_imaginary_part_identity(
            ctx, random_vector_field(rng, window(region)), random_scalar_field(rng, window(region)), tol_rel=tol
        )
        rep.extra["region"] = region
        entries.append(classify(rep))

    if not model.flow.is_zero:
        for _ in range(int(cfg.get("n_flow", 3))):
            rep = check_flow_symmetry(
                ctx, random_vector_field(rng, window("ball")), random_vector_field(rng, window("ball")), tol_rel=tol
            )
            entries.append(classify(rep))

    coercivity = []
    for _ in range(int(cfg.get("n_coercivity", 4))):
        u = random_vector_field(rng, window("atmosphere"))
        coercivity.append(check_atmosphere_coercivity(ctx, u))
    return entries, coercivity


def cmd_verify_forms(cfg, config_path, out, seed):
    model = _model_from(cfg, config_path)
    entries, coercivity = _identity_entries(model, cfg, seed)
    ok = all(e["category"] == "pass" for e in entries)
    payload = {
        "model": model.name,
        "passed": ok,
        "n_checks": len(entries),
        "entries": entries,
        "atmosphere_coercivity": coercivity,
    }
    path = os.path.join(out, "verify_forms.json")
    write_json(path, payload)
    for e in entries:
        print(f"{e['identity']:24s} {e['category']:10s} rel_err={e['rel_err']:.3e}")
    return (0 if ok else 1), [path], {"model": model.name, "n_checks": len(entries)}


def cmd_solve(cfg, config_path, out, seed, figures=True):
    model = _model_from(cfg, config_path)
    formulation = cfg.get("formulation", "coupled")
    mesh_cfg = cfg.get("mesh", {})
    source = _source_from(cfg.get("source"))
    outputs = []

    if formulation == "mms":
        refinements = [tuple(x) for x in cfg.get("refinements", [[16, 32], [32, 64], [64, 128]])]
        R_ext = float(mesh_cfg.get("R_ext", model.r_max))
        study = mms_convergence_study(
            model, refinements, R_ext=R_ext, wavenumber=float(cfg.get("wavenumber", 2.0))
        )
        path = os.path.join(out, "rates.json")
        write_json(path, study)
        outputs.append(path)
        rows = [
            f"{row_u['h']:.16e},{row_u['error']:.16e},{row_v['error']:.16e}"
            for row_u, row_v in zip(study["u"], study["v"])
        ]
        csv = os.path.join(out, "convergence.csv")
        _write_csv(csv, rows, "h,rel_l2_u,rel_l2_v")
        outputs.append(csv)
        if figures:
            from .plots import save_convergence_figure

            fig = os.path.join(out, "convergence.png")
            save_convergence_figure(study, fig)
            outputs.append(fig)
        rates = [r["rate"] for r in study["u"] if r["rate"] is not None]
        print(f"mms rates (u): {['%.2f' % r for r in rates]}")
        return 0, outputs, {"formulation": "mms", "refinements": refinements}

    R_ext = float(mesh_cfg.get("R_ext", model.r_max))
    if formulation == "coupled":
        mesh_int = Mesh1D.uniform(0.0, model.r2, int(mesh_cfg.get("n_int", 64)), interface=model.r2)
        mesh_ext = Mesh1D.uniform(model.r2, R_ext, int(mesh_cfg.get("n_ext", 128)), interface=model.r2)
        system = assemble_coupled(model, mesh_int, mesh_ext, source, R_ext=R_ext)
    elif formulation == "reference":
        mesh = Mesh1D.uniform(0.0, R_ext, int(mesh_cfg.get("n", 192)))
        system = assemble_reference(model, mesh, source, R=R_ext)
    elif formulation == "full-gravity":
        mesh = Mesh1D.uniform(0.0, R_ext, int(mesh_cfg.get("n", 192)))
        system = assemble_full_gravity(model, mesh, source, R=R_ext)
    else:
        raise ConfigError(f"unknown formulation {formulation!r}")

    solution = solve_system(system)
    residuals = {
        "formulation": formulation,
        "solver_residual": solution.residual,
        "pivot_min": solution.pivot_min,
        "pivot_ratio": solution.pivot_ratio,
        "warnings": solution.warnings,
        "dofs": system.metadata["dofs"],
        "bandwidth": system.bandwidth,
    }
    extra = None
    if formulation == "coupled":
        residuals["interface"] = interface_residuals(model, solution)
        residuals["dof_reduction_factor"] = system.metadata["dof_reduction_factor"]
        residuals["exterior_vector_dofs_equivalent"] = system.metadata[
            "exterior_vector_dofs_equivalent"
        ]
        ext = reconstruct_exterior_displacement(model, solution)
        mids = 0.5 * (mesh_ext.nodes[1:] + mesh_ext.nodes[:-1])
        extra = {"u_ext": list(zip(mids, np.atleast_1d(ext(mids))))}
        if cfg.get("oracle", False):
            residuals["exterior_oracle"] = exterior_oracle_error(model, solution)

    csv = os.path.join(out, "solution.csv")
    _solution_csv(csv, solution, extra)
    outputs.append(csv)
    path = os.path.join(out, "residuals.json")
    write_json(path, residuals)
    outputs.append(path)
    if figures:
        from .plots import save_solution_figure

        fig = os.path.join(out, "solution.png")
        save_solution_figure(solution, fig)
        outputs.append(fig)
    print(f"{formulation}: residual {solution.residual:.2e}, dofs {system.metadata['dofs']}")
    return 0, outputs, {"formulation": formulation, "dofs": system.metadata["dofs"]}


def cmd_compare(cfg, config_path, out, seed, figures=True):
    model = _model_from(cfg, config_path)
    source = _source_from(cfg.get("source"))
    radii = [float(R) for R in cfg.get("R_list", [2.0, 3.0, 4.0])]
    rows = truncation_sweep(
        model,
        source,
        int(cfg.get("n_int", 100)),
        radii,
        elements_per_unit=int(cfg.get("elements_per_unit", 100)),
    )
    kappa = estimate_truncation_decay(rows)
    monotone = all(
        rows[k]["rel_l2_interior"] <= rows[k - 1]["rel_l2_interior"] for k in range(1, len(rows))
    )
    payload = {
        "rows": rows,
        "empirical_decay_exponent": kappa,
        "monotone_decreasing": monotone,
        "note": "decay exponent is an empirical fit; no rate law is asserted",
    }
    outputs = []
    path = os.path.join(out, "compare.json")
    write_json(path, payload)
    outputs.append(path)
    csv = os.path.join(out, "compare.csv")
    _write_csv(
        csv,
        [f"{r['R']:.16e},{r['rel_l2_interior']:.16e},{r['n_ext']}" for r in rows],
        "R,rel_l2_interior,n_ext",
    )
    outputs.append(csv)
    if figures:
        from .plots import save_sweep_figure

        fig = os.path.join(out, "compare.png")
        save_sweep_figure(rows, fig)
        outputs.append(fig)
    for r in rows:
        print(f"R = {r['R']:5.2f}: interior rel L2 difference {r['rel_l2_interior']:.3e}")
    return 0, outputs, {"kappa": kappa, "monotone": monotone}


def cmd_diagnostics(cfg, config_path, out, seed, figures=True):
    model = _model_from(cfg, config_path)
    tau = float(cfg.get("tau", 0.2))
    n_radial = int(cfg.get("n_radial", 400))
    certificate = {"model": model.name, "tau": tau}

    if model.omega == 0.0:
        certificate["flag"] = "omega = 0: sector angle and rotation angles undefined"
        path = os.path.join(out, "certificate.json")
        write_json(path, certificate)
        return 0, [path], certificate

    angle = sector_angle_report(model, n_radial=n_radial, seed=seed)
    theta = angle.sector_angle
    certificate["sector_angle"] = angle.to_dict()
    if theta < np.pi / 2:
        certificate["subsonic"] = check_subsonic(model, theta).to_dict()
    else:
        # zero damping collapses the numerical range onto the real axis
        certificate["subsonic"] = {
            "passed": False,
            "margin": -np.inf,
            "flag": "sector angle >= pi/2: flow bound undefined",
        }

    betas = {}
    for variant in cfg.get("variants", ["cowling", "full", "coupled"]):
        rep = select_rotation_angle(model, variant, n_angles=int(cfg.get("n_angles", 10_000)), seed=seed)
        betas[variant] = rep.to_dict()
        if not rep.admissible:
            betas[variant]["note"] = "no admissible rotation angle on the grid"
    certificate["rotation_angles"] = betas

    profiles = []
    if theta + tau < np.pi / 2:
        beta_cow = betas.get("cowling", {}).get("beta")
        if beta_cow is not None:
            plateau = min(beta_cow + np.pi / 2 - theta - tau, np.pi - 1e-9)
            if plateau > 0:
                prof = build_phase_profile(
                    "one-region", model.r1, model.r2, plateau, sign_omega=np.sign(model.omega)
                )
                profiles.append(prof)
                certificate["phase_profile_one_region"] = prof.check_properties(10_000)
        beta_cp = betas.get("coupled", {}).get("beta")
        if beta_cp is not None:
            interface = np.pi / 2 - theta - tau
            plateau = beta_cp + np.pi / 2 - theta - tau
            if 0 < plateau <= interface:
                prof = build_phase_profile(
                    "two-region",
                    model.r1,
                    model.r2,
                    plateau,
                    sign_omega=np.sign(model.omega),
                    r3=model.r3,
                    interface_value=interface,
                )
                profiles.append(prof)
                certificate["phase_profile_two_region"] = prof.check_properties(10_000)
                certificate["pointwise_sector_check"] = pointwise_sector_check(
                    model, prof, theta, tau, n_radial=n_radial, seed=seed
                ).to_dict()

    outputs = []
    path = os.path.join(out, "certificate.json")
    write_json(path, certificate)
    outputs.append(path)
    table = os.path.join(out, "certificate.txt")
    with open(table, "w") as fh:
        fh.write(f"diagnostics certificate for '{model.name}'\n")
        fh.write(f"sector angle theta = {theta:.12g} (attained at r = {angle.attained_at:.6g})\n")
        fh.write(f"subsonic: {'PASS' if certificate['subsonic']['passed'] else 'FAIL'} ")
        fh.write(f"(margin {certificate['subsonic']['margin']:.6g})\n")
        for variant, rep in betas.items():
            beta = rep.get("beta")
            beta_s = "none" if beta is None else f"{beta:.6g}"
            fh.write(
                f"rotation angle [{variant}]: beta = {beta_s}, margin = {rep['margin']:.6g},"
                f" admissible = {rep['admissible']}\n"
            )
        if "pointwise_sector_check" in certificate:
            sc = certificate["pointwise_sector_check"]
            fh.write(
                f"pointwise sector check: worst margin {sc['worst_margin']:.6g} at r = "
                f"{sc['worst_location']:.6g} ({'PASS' if sc['passed'] else 'FAIL'})\n"
            )
    outputs.append(table)
    with open(table) as fh:
        print(fh.read(), end="")
    if figures and profiles:
        from .plots import save_phase_profile_figure

        fig = os.path.join(out, "phase_profiles.png")
        save_phase_profile_figure(profiles, fig)
        outputs.append(fig)
    return 0, outputs, {"sector_angle": theta}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "check-model": cmd_check_model,
    "verify-forms": cmd_verify_forms,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "diagnostics": cmd_diagnostics,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stellosc",
        description="verification engine for time-harmonic stellar oscillation equations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default="out", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        cfg = _load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        with Stopwatch() as timer:
            if args.command in ("solve", "compare", "diagnostics"):
                code, outputs, resolved = handler(
                    cfg, args.config, args.out, args.seed, figures=not args.no_figures
                )
            else:
                code, outputs, resolved = handler(cfg, args.config, args.out, args.seed)
        manifest = RunManifest(
            command=args.command,
            config_path=os.path.abspath(args.config),
            resolved=jsonable(resolved),
            version=__version__,
            seed=args.seed,
            outputs=[os.path.relpath(p, args.out) for p in outputs],
            wall_clock_s=timer.elapsed,
        )
        manifest.write(args.out)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
