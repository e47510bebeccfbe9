"""Quadrature evaluation of the oscillation sesquilinear forms.

The forms are evaluated on smooth test fields by fixed product rules
covering the flow ball B_{r1}, the transition annulus A_{r1,r2}, and a
truncated atmosphere annulus A_{r2,R_out}; every compactly supported
integrand is integrated exactly up to quadrature error.

Conjugation convention: the second argument is conjugated throughout,
<u, u'> = int rho u . conj(u').  Gravity pairings are rho-weighted
except the stiffness term <grad psi, grad psi'>/(4 pi G), which is a
plain L^2 product.  The surface pairings of the coupled form are plain
L^2 integrals on the coupling sphere, which is the right realization of
the duality pairings for smooth fields and finite element traces.

Default tolerances for identity checks: relative 1e-9 with absolute
floor 1e-12 (the quadrature is spectrally accurate on smooth bumps).
"""

from __future__ import annotations

import numpy as np

from .background import BackgroundModel
from .calculus import QuadratureRule, ZeroField, annulus_rule, ball_rule, sphere_rule
from .reporting import IdentityReport, make_identity_report

REL_TOL = 1e-9
ABS_TOL = 1e-12

# flipping this constant would conjugate the first argument instead; all
# identity checks are written against the second-argument convention
CONJUGATE_SECOND_ARGUMENT = True


def _as_field(f, is_vector):
    return ZeroField(is_vector) if f is None or f == 0 else f


class FormContext:
    """Background model plus the quadrature rules covering its regions."""

    def __init__(
        self,
        model: BackgroundModel,
        r_out: float | None = None,
        n_r_ball: int = 128,
        n_r_annulus: int = 128,
        n_r_atmosphere: int = 160,
        n_theta: int = 12,
        n_phi: int = 24,
    ):
        self.model = model
        self.r_out = float(r_out) if r_out is not None else model.r_max
        if self.r_out <= model.r2:
            raise ValueError("outer cutoff must exceed the coupling radius r2")
        self.rules = (
            ball_rule(model.r1, n_r_ball, n_theta, n_phi),
            annulus_rule(model.r1, model.r2, n_r_annulus, n_theta, n_phi),
            annulus_rule(model.r2, self.r_out, n_r_atmosphere, n_theta, n_phi),
        )
        self.surface = sphere_rule(model.r2, n_theta, n_phi)
        self._cache: dict[int, dict] = {}

    # -- cached model data at quadrature nodes ------------------------------

    def domain_data(self, rule: QuadratureRule) -> dict:
        key = id(rule)
        if key not in self._cache:
            data = self.model.fields_at(rule.points)
            data["pts"] = rule.points
            data["w"] = rule.weights
            data["w_rho"] = rule.weights * data["rho"]
            data["b"] = self.model.flow.value(rule.points)
            if rule.radial_interval[0] >= self.model.r2 - 1e-12:
                eta = self.model.scale_exponent_many(np.clip(data["r"], self.model.r2, None))
                data["exp2eta"] = np.exp(2.0 * eta)
                data["m2_inv"] = np.linalg.inv(
                    data["m2"]
                    + 1j
                    * self.model.omega
                    * data["gamma"][:, None, None]
                    * np.eye(3)[None, :, :]
                )
            self._cache[key] = data
        return self._cache[key]

    def _check_support(self, *fields):
        for f in fields:
            if f.support[1] > self.r_out + 1e-12:
                raise ValueError(
                    f"field support extends to {f.support[1]}, beyond the "
                    f"quadrature cutoff {self.r_out}"
                )

    @staticmethod
    def _active(rule: QuadratureRule, *fields) -> bool:
        lo, hi = rule.radial_interval
        for f in fields:
            flo, fhi = f.support
            if fhi <= lo + 1e-14 or flo >= hi - 1e-14:
                return False
        return True


def _kinetic_factor(ctx: FormContext, data, u):
    """(omega + i b.grad + i Omega x) u at the nodes."""
    model = ctx.model
    out = model.omega * u.value(data["pts"])
    if not model.flow.is_zero:
        jac = u.jacobian(data["pts"])
        out = out + 1j * np.einsum("nil,nl->ni", jac, data["b"].astype(complex))
    if model.rotating:
        out = out + 1j * np.cross(model.Omega, u.value(data["pts"]))
    return out


def eval_full_form(ctx: FormContext, pair, pair2, breakdown: bool = False):
    """Sesquilinear form of the full displacement/gravity system.

    ``pair`` and ``pair2`` are (vector field, scalar field) tuples; pass
    None (or 0) for an absent component.
    """
    u, psi = (_as_field(pair[0], True), _as_field(pair[1], False))
    u2, psi2 = (_as_field(pair2[0], True), _as_field(pair2[1], False))
    ctx._check_support(u, psi, u2, psi2)
    terms = {
        "compression": 0.0 + 0.0j,
        "pressure_coupling": 0.0 + 0.0j,
        "kinetic": 0.0 + 0.0j,
        "curvature": 0.0 + 0.0j,
        "damping": 0.0 + 0.0j,
        "gravity_coupling": 0.0 + 0.0j,
        "gravity_stiffness": 0.0 + 0.0j,
    }
    model = ctx.model
    for rule in ctx.rules:
        uu = ctx._active(rule, u, u2)
        upsi2 = ctx._active(rule, u, psi2)
        psiu2 = ctx._active(rule, psi, u2)
        psipsi2 = ctx._active(rule, psi, psi2)
        if not (uu or upsi2 or psiu2 or psipsi2):
            continue
        data = ctx.domain_data(rule)
        w, w_rho = data["w"], data["w_rho"]
        if uu:
            du = u.div(data["pts"])
            du2 = np.conj(u2.div(data["pts"]))
            uv = u.value(data["pts"])
            u2c = np.conj(u2.value(data["pts"]))
            terms["compression"] += np.sum(w_rho * data["cs2"] * du * du2)
            gp_u = np.einsum("nl,nl->n", data["grad_p"].astype(complex), uv)
            gp_u2 = np.einsum("nl,nl->n", data["grad_p"].astype(complex), np.conj(u2c))
            terms["pressure_coupling"] += np.sum(w * (gp_u * du2 + du * np.conj(gp_u2)))
            F = _kinetic_factor(ctx, data, u)
            F2 = _kinetic_factor(ctx, data, u2)
            terms["kinetic"] -= np.sum(w_rho * np.einsum("ni,ni->n", F, np.conj(F2)))
            mat = data["hess_p"] / data["rho"][:, None, None] - data["hess_phi"]
            terms["curvature"] += np.sum(
                w_rho * np.einsum("nij,nj,ni->n", mat.astype(complex), uv, u2c)
            )
            terms["damping"] -= 1j * model.omega * np.sum(w_rho * data["gamma"] * np.einsum("ni,ni->n", uv, u2c))
        if psiu2:
            gpsi = psi.grad(data["pts"])
            u2c = np.conj(u2.value(data["pts"]))
            terms["gravity_coupling"] -= np.sum(w_rho * np.einsum("ni,ni->n", gpsi, u2c))
        if upsi2:
            uv = u.value(data["pts"])
            gpsi2c = np.conj(psi2.grad(data["pts"]))
            terms["gravity_coupling"] -= np.sum(w_rho * np.einsum("ni,ni->n", uv, gpsi2c))
        if psipsi2:
            gpsi = psi.grad(data["pts"])
            gpsi2c = np.conj(psi2.grad(data["pts"]))
            terms["gravity_stiffness"] += np.sum(w * np.einsum("ni,ni->n", gpsi, gpsi2c)) / (
                4.0 * np.pi * model.G
            )
    total = sum(terms.values())
    return (total, terms) if breakdown else total


def eval_reformulated_form(ctx: FormContext, pair, pair2, breakdown: bool = False):
    """Same form written through (div + q.) and the curvature matrix m1."""
    u, psi = (_as_field(pair[0], True), _as_field(pair[1], False))
    u2, psi2 = (_as_field(pair2[0], True), _as_field(pair2[1], False))
    ctx._check_support(u, psi, u2, psi2)
    terms = {
        "compression_q": 0.0 + 0.0j,
        "kinetic": 0.0 + 0.0j,
        "curvature_m1": 0.0 + 0.0j,
        "damping": 0.0 + 0.0j,
        "gravity_coupling": 0.0 + 0.0j,
        "gravity_stiffness": 0.0 + 0.0j,
    }
    model = ctx.model
    for rule in ctx.rules:
        uu = ctx._active(rule, u, u2)
        upsi2 = ctx._active(rule, u, psi2)
        psiu2 = ctx._active(rule, psi, u2)
        psipsi2 = ctx._active(rule, psi, psi2)
        if not (uu or upsi2 or psiu2 or psipsi2):
            continue
        data = ctx.domain_data(rule)
        w, w_rho = data["w"], data["w_rho"]
        if uu:
            uv = u.value(data["pts"])
            u2c = np.conj(u2.value(data["pts"]))
            comp = u.div(data["pts"]) + np.einsum("nl,nl->n", data["q"].astype(complex), uv)
            comp2 = u2.div(data["pts"]) + np.einsum(
                "nl,nl->n", data["q"].astype(complex), u2.value(data["pts"])
            )
            terms["compression_q"] += np.sum(w_rho * data["cs2"] * comp * np.conj(comp2))
            F = _kinetic_factor(ctx, data, u)
            F2 = _kinetic_factor(ctx, data, u2)
            terms["kinetic"] -= np.sum(w_rho * np.einsum("ni,ni->n", F, np.conj(F2)))
            terms["curvature_m1"] -= np.sum(
                w_rho * np.einsum("nij,nj,ni->n", data["m1"].astype(complex), uv, u2c)
            )
            terms["damping"] -= 1j * model.omega * np.sum(w_rho * data["gamma"] * np.einsum("ni,ni->n", uv, u2c))
        if psiu2:
            terms["gravity_coupling"] -= np.sum(
                w_rho * np.einsum("ni,ni->n", psi.grad(data["pts"]), np.conj(u2.value(data["pts"])))
            )
        if upsi2:
            terms["gravity_coupling"] -= np.sum(
                w_rho * np.einsum("ni,ni->n", u.value(data["pts"]), np.conj(psi2.grad(data["pts"])))
            )
        if psipsi2:
            terms["gravity_stiffness"] += np.sum(
                w * np.einsum("ni,ni->n", psi.grad(data["pts"]), np.conj(psi2.grad(data["pts"])))
            ) / (4.0 * np.pi * model.G)
    total = sum(terms.values())
    return (total, terms) if breakdown else total


def eval_cowling_form(ctx: FormContext, u, u2, breakdown: bool = False):
    """Displacement-only restriction (gravity perturbation set to zero)."""
    return eval_full_form(ctx, (u, None), (u2, None), breakdown=breakdown)


def eval_coupled_form(ctx: FormContext, pair, pair2, breakdown: bool = False):
    """Interior-vector / exterior-scalar coupled form.

    ``pair`` = (u, v): u is a vector field whose relevant restriction is
    the closed ball B_{r2} (a nonzero normal trace at r2 is allowed), v
    a scalar potential on the atmosphere with bounded support.
    """
    u, v = (_as_field(pair[0], True), _as_field(pair[1], False))
    u2, v2 = (_as_field(pair2[0], True), _as_field(pair2[1], False))
    ctx._check_support(v, v2)
    model = ctx.model
    terms = {
        "interior": 0.0 + 0.0j,
        "surface_coupling": 0.0 + 0.0j,
        "exterior_stiffness": 0.0 + 0.0j,
        "exterior_mass": 0.0 + 0.0j,
    }
    # interior Cowling form over B_{r2} (ball + transition annulus)
    for rule in ctx.rules[:2]:
        if not ctx._active(rule, u, u2):
            continue
        data = ctx.domain_data(rule)
        w_rho = data["w_rho"]
        uv = u.value(data["pts"])
        u2c = np.conj(u2.value(data["pts"]))
        comp = u.div(data["pts"]) + np.einsum("nl,nl->n", data["q"].astype(complex), uv)
        comp2 = u2.div(data["pts"]) + np.einsum(
            "nl,nl->n", data["q"].astype(complex), u2.value(data["pts"])
        )
        terms["interior"] += np.sum(w_rho * data["cs2"] * comp * np.conj(comp2))
        F = _kinetic_factor(ctx, data, u)
        F2 = _kinetic_factor(ctx, data, u2)
        terms["interior"] -= np.sum(w_rho * np.einsum("ni,ni->n", F, np.conj(F2)))
        terms["interior"] -= np.sum(
            w_rho * np.einsum("nij,nj,ni->n", data["m1"].astype(complex), uv, u2c)
        )
        terms["interior"] -= 1j * model.omega * np.sum(
            w_rho * data["gamma"] * np.einsum("ni,ni->n", uv, u2c)
        )

    # surface pairings on the coupling sphere (plain L^2)
    sp = ctx.surface.points
    sw = ctx.surface.weights
    nu = sp / model.r2
    if not isinstance(u, ZeroField) and not isinstance(v2, ZeroField):
        nu_u = np.einsum("ni,ni->n", u.value(sp), nu.astype(complex))
        terms["surface_coupling"] += np.sum(sw * nu_u * np.conj(v2.value(sp)))
    if not isinstance(v, ZeroField) and not isinstance(u2, ZeroField):
        nu_u2 = np.einsum("ni,ni->n", u2.value(sp), nu.astype(complex))
        terms["surface_coupling"] += np.sum(sw * v.value(sp) * np.conj(nu_u2))

    # exterior scalar form with the e^{2 eta}/rho weight
    rule = ctx.rules[2]
    if ctx._active(rule, v, v2):
        data = ctx.domain_data(rule)
        w = data["w"]
        wt = data["exp2eta"] / data["rho"]
        gv = v.grad(data["pts"])
        gv2c = np.conj(v2.grad(data["pts"]))
        flux = np.einsum("nij,nj->ni", data["m2_inv"], gv)
        terms["exterior_stiffness"] += np.sum(w * wt * np.einsum("ni,ni->n", flux, gv2c))
        terms["exterior_mass"] -= np.sum(
            w * wt / data["cs2"] * v.value(data["pts"]) * np.conj(v2.value(data["pts"]))
        )
    total = sum(terms.values())
    return (total, terms) if breakdown else total


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------

def _abs_floor(tol_rel: float) -> float:
    # the absolute floor follows a user-tightened relative tolerance so
    # that tightening actually bites on O(1) values
    return min(ABS_TOL, tol_rel * 1e-3)


def check_reformulation_identity(ctx: FormContext, pair, pair2, tol_rel: float = REL_TOL) -> IdentityReport:
    """The two representations of the form must agree."""
    a = eval_full_form(ctx, pair, pair2)
    b = eval_reformulated_form(ctx, pair, pair2)
    return make_identity_report("form-reformulation", a, b, tol_rel, _abs_floor(tol_rel))


def check_imaginary_part_identity(ctx: FormContext, u, psi, tol_rel: float = REL_TOL) -> IdentityReport:
    """Im a((u,psi),(u,psi)) = -omega <gamma u, u>.

    The damping term -i omega <gamma u, u'> is the only source of an
    imaginary part on the diagonal; the sign is fixed by the e^{-i w t}
    phase convention and frozen by this check.  Also verifies that the
    gravity and kinetic contributions are separately real.
    """
    model = ctx.model
    total, terms = eval_full_form(ctx, (u, psi), (u, psi), breakdown=True)
    u_f = _as_field(u, True)
    gamma_term = 0.0
    for rule in ctx.rules:
        if not ctx._active(rule, u_f, u_f):
            continue
        data = ctx.domain_data(rule)
        uv = u_f.value(data["pts"])
        gamma_term += float(
            np.real(np.sum(data["w_rho"] * data["gamma"] * np.einsum("ni,ni->n", uv, np.conj(uv))))
        )
    if model.omega == 0.0:
        rep = make_identity_report(
            "imaginary-part", total.imag, 0.0, tol_rel, _abs_floor(tol_rel), scale=max(abs(total), 1.0)
        )
        rep.passed = False
        rep.extra["flag"] = "omega != 0 required"
        return rep
    scale = max(abs(model.omega) * gamma_term, ABS_TOL)
    rep = make_identity_report(
        "imaginary-part",
        total.imag,
        -model.omega * gamma_term,
        tol_rel,
        _abs_floor(tol_rel),
        scale=scale,
    )
    rep.extra.update(
        {
            "im_gravity": float(
                (terms["gravity_coupling"] + terms["gravity_stiffness"]).imag
            ),
            "im_kinetic": float(terms["kinetic"].imag),
            "omega_gamma_term": float(model.omega * gamma_term),
        }
    )
    return rep


def check_flow_symmetry(ctx: FormContext, u, u2, tol_rel: float = REL_TOL) -> IdentityReport:
    """<i (b.grad) u, u'> = <u, i (b.grad) u'> under div(rho b) = 0.

    If the configured flow is not solenoidal (beyond 1e-10), the check
    is skipped and the report carries the predicted defect
    -i <div(rho b) u, u'>_{L^2} from the integration-by-parts formula.
    """
    model = ctx.model
    lhs = 0.0 + 0.0j
    rhs = 0.0 + 0.0j
    defect = 0.0 + 0.0j
    div_rho_b_max = 0.0
    for rule in ctx.rules:
        if not ctx._active(rule, u, u2):
            continue
        data = ctx.domain_data(rule)
        if not np.any(data["b"]):
            continue
        b = data["b"].astype(complex)
        du = 1j * np.einsum("nil,nl->ni", u.jacobian(data["pts"]), b)
        du2 = 1j * np.einsum("nil,nl->ni", u2.jacobian(data["pts"]), b)
        uv = u.value(data["pts"])
        u2c = np.conj(u2.value(data["pts"]))
        lhs += np.sum(data["w_rho"] * np.einsum("ni,ni->n", du, u2c))
        rhs += np.sum(data["w_rho"] * np.einsum("ni,ni->n", uv, np.conj(du2)))
        div_rb = model.flow.div_rho_b(data["pts"])
        div_rho_b_max = max(div_rho_b_max, float(np.max(np.abs(div_rb))))
        defect += -1j * np.sum(data["w"] * div_rb * np.einsum("ni,ni->n", uv, u2c))
    solenoidal = div_rho_b_max <= 1e-10
    scale = max(abs(lhs), abs(rhs), ABS_TOL)
    rep = make_identity_report("flow-symmetry", lhs, rhs, tol_rel, _abs_floor(tol_rel), scale=scale)
    rep.extra.update(
        {
            "div_rho_b_max": div_rho_b_max,
            "predicted_defect": defect,
            "solenoidal": solenoidal,
        }
    )
    if not solenoidal:
        rep.extra["flag"] = "div(rho b) != 0: symmetry not expected; defect reported"
    return rep


def check_atmosphere_coercivity(ctx: FormContext, u, angle_grid=None) -> dict:
    """Rotated-coercivity certificate for an atmosphere-supported field.

    Finds the angle on the grid maximizing
    Re(e^{-i beta sign w} a_cow(u, u)) / (|c_s (div+q.) u|^2 + |u|^2)
    and reports it with the achieved margin.
    """
    model = ctx.model
    if u is None or isinstance(u, ZeroField):
        return {"flag": "zero field", "margin": 0.0, "beta": None}
    if u.support[0] < model.r2 - 1e-12:
        raise ValueError("field must be supported in the atmosphere (r >= r2)")
    if angle_grid is None:
        angle_grid = np.linspace(-np.pi, np.pi, 4001)
    a = eval_cowling_form(ctx, u, u)
    data = ctx.domain_data(ctx.rules[2])
    uv = u.value(data["pts"])
    comp = u.div(data["pts"]) + np.einsum("nl,nl->n", data["q"].astype(complex), uv)
    comp_norm = float(np.real(np.sum(data["w_rho"] * data["cs2"] * np.abs(comp) ** 2)))
    u_norm = float(np.real(np.sum(data["w_rho"] * np.einsum("ni,ni->n", uv, np.conj(uv)))))
    denom = comp_norm + u_norm
    sign = np.sign(model.omega) or 1.0
    rotated = np.real(np.exp(-1j * np.asarray(angle_grid) * sign) * a)
    k = int(np.argmax(rotated))
    return {
        "beta": float(angle_grid[k]),
        "margin": float(rotated[k] / denom) if denom > 0 else 0.0,
        "rotated_real_part": float(rotated[k]),
        "compression_norm_sq": comp_norm,
        "field_norm_sq": u_norm,
        "form_value": complex(a),
    }
