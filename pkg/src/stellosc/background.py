"""Stellar background models and their derived coefficient fields.

A model bundles the radial profiles (density rho, sound speed c_s,
pressure p, gravitational potential phi, damping gamma), the wave
frequency omega, the frame rotation Omega, the gravitational constant
G, a background flow b supported inside the inner ball, and the three
radii r1 < r2 < r3 that separate flow region, transition layer, and
atmosphere.

Derived coefficients at a point:

    q   = grad(p) / (c_s^2 rho)                      (radial: q_r x^)
    m1  = -rho^{-1} (hess p - rho hess phi - c_s^2 rho q q^T)
    m2  = m1 + (omega + i Omega x)^* (omega + i Omega x)

For a spherically symmetric scalar s(r) the Hessian has radial
eigenvalue s'' and tangential eigenvalue s'/r; this standard identity
is exercised against finite differences in the test suite.  m1 is real
symmetric, m2 is Hermitian (real symmetric exactly when Omega = 0).

The cumulative exponent eta(r) = int_{r2}^r p'/(c_s^2 rho) dr' rescales
the displacement in the atmosphere; eta(r2) = 0 and eta' = q_r.

Models are immutable after load; every operation here is a pure
function of (model, arguments).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError
from .flows import FlowField, ZeroFlow, flow_from_config
from .profiles import RadialProfile, profile_from_config

# coefficient fields are evaluated at max(r, _R_FLOOR) to sidestep the
# 0/0 in tangential Hessian eigenvalues exactly at the origin
_R_FLOOR = 1e-12


@dataclass(frozen=True)
class BackgroundModel:
    omega: float
    Omega: np.ndarray
    G: float
    rho: RadialProfile
    cs: RadialProfile
    p: RadialProfile
    phi: RadialProfile
    gamma: RadialProfile
    flow: FlowField
    r1: float
    r2: float
    r3: float
    r_max: float
    name: str = "model"
    config: dict = dc_field(default_factory=dict, repr=False)

    @property
    def rotating(self) -> bool:
        return bool(np.any(self.Omega != 0.0))

    def rotation_matrix(self) -> np.ndarray:
        """Skew matrix C with C v = Omega x v."""
        ox, oy, oz = self.Omega
        return np.array([[0.0, -oz, oy], [oz, 0.0, -ox], [-oy, ox, 0.0]])

    # -- radial coefficient fields (vectorized over r) ---------------------

    def q_r(self, r):
        r = np.maximum(np.asarray(r, dtype=float), _R_FLOOR)
        return self.p.d1(r) / (self.cs.value(r) ** 2 * self.rho.value(r))

    def dq_r(self, r):
        """d/dr of q_r, from profile derivatives up to second order."""
        r = np.maximum(np.asarray(r, dtype=float), _R_FLOOR)
        cs2rho = self.cs.value(r) ** 2 * self.rho.value(r)
        d_cs2rho = 2.0 * self.cs.value(r) * self.cs.d1(r) * self.rho.value(r) + self.cs.value(
            r
        ) ** 2 * self.rho.d1(r)
        return self.p.d2(r) / cs2rho - self.p.d1(r) * d_cs2rho / cs2rho**2

    def m1_eigenvalues(self, r):
        """(m1_rr, m1_tt) radial/tangential eigenvalues of m1."""
        r = np.maximum(np.asarray(r, dtype=float), _R_FLOOR)
        rho = self.rho.value(r)
        cs2 = self.cs.value(r) ** 2
        qr = self.p.d1(r) / (cs2 * rho)
        m1_rr = -(self.p.d2(r) - rho * self.phi.d2(r) - cs2 * rho * qr**2) / rho
        # tangential Hessian eigenvalues s'/r combine as (p' - rho phi')/r;
        # keep the difference in the numerator so aligned models cancel exactly
        num = self.p.d1(r) - rho * self.phi.d1(r)
        m1_tt = -np.where(num == 0.0, 0.0, num / r) / rho
        return m1_rr, m1_tt

    def m2_eigenvalues(self, r):
        """(m2_rr, m2_tt) for Omega = 0 models (m2 = m1 + omega^2 I)."""
        if self.rotating:
            raise ValueError("radial m2 eigenvalues require Omega = 0")
        m1_rr, m1_tt = self.m1_eigenvalues(r)
        return m1_rr + self.omega**2, m1_tt + self.omega**2

    def scale_exponent(self, r) -> float:
        """eta(r): cumulative integral of q_r from r2, for r >= r2.

        Adaptive quadrature to relative tolerance 1e-10.
        """
        r = float(r)
        if r < self.r2 - 1e-12:
            raise ValueError(f"scale exponent defined for r >= r2 = {self.r2}, got {r}")
        if r <= self.r2:
            return 0.0
        val, _ = quad(lambda s: float(self.q_r(s)), self.r2, r, epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    def scale_exponent_many(self, rs) -> np.ndarray:
        """eta at many radii; cumulative segment-wise adaptive quadrature.

        Radii are deduplicated first: product quadrature grids repeat the
        same radius across many angular nodes.
        """
        rs = np.asarray(rs, dtype=float)
        if np.any(rs < self.r2 - 1e-12):
            raise ValueError("scale exponent defined for r >= r2")
        uniq, inverse = np.unique(np.maximum(rs, self.r2), return_inverse=True)
        vals = np.empty_like(uniq)
        acc = 0.0
        prev = self.r2
        for i, r in enumerate(uniq):
            seg, _ = quad(lambda s: float(self.q_r(s)), prev, r, epsabs=1e-14, epsrel=1e-12, limit=200)
            acc += seg
            vals[i] = acc
            prev = r
        return vals[inverse].reshape(rs.shape)

    # -- 3d coefficient fields (vectorized over points (N,3)) --------------

    def fields_at(self, pts) -> dict:
        """All coefficient fields at 3d points; keys documented in forms."""
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts**2, axis=1))
        rs = np.maximum(r, _R_FLOOR)
        xhat = pts / rs[:, None]
        rho = self.rho.value(rs)
        cs = self.cs.value(rs)
        gamma = self.gamma.value(rs)
        dp = self.p.d1(rs)
        grad_p = dp[:, None] * xhat
        q = grad_p / (cs**2 * rho)[:, None]

        eye = np.eye(3)[None, :, :]
        proj_r = xhat[:, :, None] * xhat[:, None, :]
        proj_t = eye - proj_r

        def radial_hess(profile):
            d2 = profile.d2(rs)
            d1_over_r = profile.d1(rs) / rs
            return d2[:, None, None] * proj_r + d1_over_r[:, None, None] * proj_t

        hess_p = radial_hess(self.p)
        hess_phi = radial_hess(self.phi)

        m1_rr, m1_tt = self.m1_eigenvalues(rs)
        m1 = m1_rr[:, None, None] * proj_r + m1_tt[:, None, None] * proj_t

        rot = np.zeros((1, 3, 3), dtype=complex)
        if self.rotating:
            C = self.rotation_matrix()
            Om = self.Omega
            rot = (
                (np.dot(Om, Om)) * np.eye(3)
                - np.outer(Om, Om)
                + 2j * self.omega * C
            )[None, :, :]
        m2 = m1.astype(complex) + self.omega**2 * eye + rot

        return {
            "r": r,
            "rho": rho,
            "cs": cs,
            "cs2": cs**2,
            "gamma": gamma,
            "grad_p": grad_p,
            "hess_p": hess_p,
            "hess_phi": hess_phi,
            "q": q,
            "m1": m1,
            "m2": m2,
        }


@dataclass(frozen=True)
class CoefficientSample:
    """Derived coefficients at one radius (direction convention: x^ = e_z)."""

    r: float
    q: np.ndarray
    eta: float | None
    m1: np.ndarray
    m2: np.ndarray
    m1_rr: float
    m1_tt: float
    m2_rr: complex
    m2_tt: complex


def derived_coefficients(model: BackgroundModel, point) -> CoefficientSample:
    """Coefficient sample at a radius or 3-vector point.

    A scalar radius is interpreted as the point (0, 0, r).
    """
    pt = np.asarray(point, dtype=float)
    if pt.ndim == 0:
        pt = np.array([0.0, 0.0, float(pt)])
    if pt.shape != (3,):
        raise ValueError("point must be a radius or a 3-vector")
    r = float(np.linalg.norm(pt))
    if model.rho.value(max(r, _R_FLOOR)) <= 0.0:
        raise ValueError(f"density not positive at r={r}")
    fields = model.fields_at(pt[None, :])
    m1_rr, m1_tt = model.m1_eigenvalues(r)
    m2_rr = complex(m1_rr + model.omega**2)
    m2_tt = complex(m1_tt + model.omega**2)
    if model.rotating:
        # rotation mixes directions; keep the radial/tangential labels for
        # the Omega-independent part only
        m2_rr = m2_tt = complex(np.nan)
    eta = model.scale_exponent(r) if r >= model.r2 else None
    return CoefficientSample(
        r=r,
        q=fields["q"][0],
        eta=eta,
        m1=fields["m1"][0],
        m2=fields["m2"][0],
        m1_rr=float(m1_rr),
        m1_tt=float(m1_tt),
        m2_rr=m2_rr,
        m2_tt=m2_tt,
    )


# ---------------------------------------------------------------------------
# Model loading
# ---------------------------------------------------------------------------

_REQUIRED_FIELDS = ("omega", "rho", "cs", "p", "phi", "gamma", "r1", "r2", "r3")


def load_model(config, base_dir=None) -> BackgroundModel:
    """Build a model from a config dict or a path to a JSON document."""
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        base_dir = os.path.dirname(os.path.abspath(path))
        try:
            with open(path) as fh:
                config = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read model config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("model config must be a JSON object")

    missing = [k for k in _REQUIRED_FIELDS if k not in config]
    if missing:
        raise ConfigError(f"model config missing fields: {', '.join(missing)}")

    r1, r2, r3 = (float(config[k]) for k in ("r1", "r2", "r3"))
    if not 0.0 < r1 < r2 < r3:
        raise ConfigError(f"radii unordered: need 0 < r1 < r2 < r3, got {r1}, {r2}, {r3}")

    rho = profile_from_config(config["rho"], base_dir)
    cs = profile_from_config(config["cs"], base_dir)
    p = profile_from_config(config["p"], base_dir)
    phi = profile_from_config(config["phi"], base_dir)
    gamma = profile_from_config(config["gamma"], base_dir)
    flow = flow_from_config(config.get("b"), rho)

    Omega = np.asarray(config.get("Omega", [0.0, 0.0, 0.0]), dtype=float)
    if Omega.shape != (3,):
        raise ConfigError("Omega must be a 3-vector")
    r_max = float(config.get("r_max", 2.0 * r3))
    if r_max <= r3:
        raise ConfigError("r_max must exceed r3")

    model = BackgroundModel(
        omega=float(config["omega"]),
        Omega=Omega,
        G=float(config.get("G", 1.0)),
        rho=rho,
        cs=cs,
        p=p,
        phi=phi,
        gamma=gamma,
        flow=flow,
        r1=r1,
        r2=r2,
        r3=r3,
        r_max=r_max,
        name=str(config.get("name", "model")),
        config=config,
    )

    # probing a few radii catches tabulated profiles that do not cover the
    # working range, and negative density samples, at load time
    probe = np.linspace(_R_FLOOR, r_max, 16)
    for prof, label in ((rho, "rho"), (cs, "cs"), (p, "p"), (phi, "phi"), (gamma, "gamma")):
        vals = np.asarray(prof.value(probe), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"profile {label} not finite on [0, {r_max}]")
        if label == "rho" and np.any(vals <= 0.0):
            raise ConfigError("negative density sample in rho profile")
    if flow.support_radius > r1 + 1e-12:
        raise ConfigError(
            f"flow support radius {flow.support_radius} exceeds r1 = {r1}"
        )
    return model


# ---------------------------------------------------------------------------
# Assumption validation
# ---------------------------------------------------------------------------

@dataclass
class CheckEntry:
    name: str
    passed: bool
    blocking: bool
    value: float
    threshold: float
    margin: float
    details: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "blocking": bool(self.blocking),
            "value": float(self.value),
            "threshold": float(self.threshold),
            "margin": float(self.margin),
            "details": self.details,
        }


@dataclass
class ValidationReport:
    model_name: str
    entries: list
    sampling: dict

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.blocking)

    def to_dict(self):
        return {
            "model": self.model_name,
            "passed": self.passed,
            "sampling": self.sampling,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_table(self) -> str:
        lines = [
            f"assumption checks for model '{self.model_name}' "
            f"(n={self.sampling['n_radial']}, r_max={self.sampling['r_max']:g})",
            f"{'check':38s} {'status':6s} {'value':>13s} {'threshold':>13s} {'margin':>13s}",
        ]
        for e in self.entries:
            status = "PASS" if e.passed else ("FAIL" if e.blocking else "info")
            lines.append(
                f"{e.name:38s} {status:6s} {e.value:13.6g} {e.threshold:13.6g} {e.margin:13.6g}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def validate_assumptions(model: BackgroundModel, n_radial: int = 10_000, r_max=None) -> ValidationReport:
    """Check the standing model assumptions on a dense radial grid.

    Suprema/infima are approximated by sampling; the grid is recorded in
    the report so failures are reproducible.  The hydrostatic residual
    entry is informational only and never blocks.
    """
    if r_max is None:
        r_max = model.r_max
    rs = np.linspace(r_max * 1e-6, r_max, n_radial)
    entries = []

    rho = model.rho.value(rs)
    entries.append(
        CheckEntry(
            "density positive on bounded balls",
            bool(np.min(rho) > 0.0),
            True,
            float(np.min(rho)),
            0.0,
            float(np.min(rho)),
        )
    )

    cs_min = float(np.min(model.cs.value(rs)))
    entries.append(CheckEntry("sound speed lower bound", cs_min > 0.0, True, cs_min, 0.0, cs_min))

    gamma_min = float(np.min(model.gamma.value(rs)))
    entries.append(
        CheckEntry("damping lower bound", gamma_min > 0.0, True, gamma_min, 0.0, gamma_min)
    )

    outside = rs[rs >= model.r1]
    b_outside = float(np.max(model.flow.max_magnitude(outside))) if outside.size else 0.0
    entries.append(
        CheckEntry(
            "flow supported inside inner ball",
            b_outside == 0.0 and model.flow.support_radius <= model.r1 + 1e-12,
            True,
            b_outside,
            0.0,
            -b_outside,
            details=f"flow support radius {model.flow.support_radius}",
        )
    )

    q_sup = float(np.max(np.abs(model.q_r(rs))))
    entries.append(
        CheckEntry("pressure-gradient coefficient bounded", np.isfinite(q_sup), True, q_sup, np.inf, np.inf)
    )

    m1_rr, m1_tt = model.m1_eigenvalues(rs)
    m1_sup = float(np.max(np.maximum(np.abs(m1_rr), np.abs(m1_tt))))
    entries.append(
        CheckEntry("curvature matrix bounded", np.isfinite(m1_sup), True, m1_sup, np.inf, np.inf)
    )

    # subsonic condition |b/c_s|^2 < 1/(1 + tan^2 theta)
    if model.omega != 0.0:
        from .diagnostics import compute_sector_angle

        theta = compute_sector_angle(model, n_radial=min(n_radial, 2000))
        bound = 1.0 / (1.0 + np.tan(theta) ** 2)
        mach2 = float(np.max((model.flow.max_magnitude(rs) / model.cs.value(rs)) ** 2))
        entries.append(
            CheckEntry(
                "subsonic flow condition",
                mach2 < bound,
                True,
                mach2,
                float(bound),
                float(bound - mach2),
                details=f"sector angle {theta:.6g}",
            )
        )
    else:
        entries.append(
            CheckEntry(
                "subsonic flow condition",
                False,
                True,
                np.nan,
                np.nan,
                np.nan,
                details="omega = 0: sector angle undefined",
            )
        )

    # hydrostatic equilibrium residual (informational; stability does not
    # require the background equations to hold)
    res = _hydrostatic_residual(model, rs[:: max(1, n_radial // 64)])
    entries.append(
        CheckEntry(
            "hydrostatic equilibrium residual",
            True,
            False,
            res,
            np.inf,
            np.inf,
            details="informational only",
        )
    )

    low_trust = [
        label
        for prof, label in (
            (model.rho, "rho"),
            (model.cs, "cs"),
            (model.p, "p"),
            (model.phi, "phi"),
        )
        if not prof.d2_trusted
    ]
    if low_trust:
        entries.append(
            CheckEntry(
                "second derivatives low-trust",
                True,
                False,
                float(len(low_trust)),
                np.inf,
                np.inf,
                details="tabulated profiles: " + ", ".join(low_trust),
            )
        )

    return ValidationReport(model.name, entries, {"n_radial": n_radial, "r_max": float(r_max)})


def _hydrostatic_residual(model: BackgroundModel, rs) -> float:
    """sup over sample points of |rho(d_b b + 2 Om x b + Om x (Om x x) - grad phi) + grad p|."""
    s3 = 1.0 / np.sqrt(3.0)
    dirs = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [s3, s3, s3],
        ]
    )
    worst = 0.0
    C = model.rotation_matrix()
    for d in dirs:
        pts = rs[:, None] * d[None, :]
        rho = model.rho.value(rs)
        grad_phi = model.phi.d1(rs)[:, None] * d[None, :]
        grad_p = model.p.d1(rs)[:, None] * d[None, :]
        b = model.flow.value(pts)
        if model.flow.is_zero:
            adv = np.zeros_like(pts)
        else:
            # (b . grad) b by central differences; informational accuracy
            h = 1e-6 * max(model.r1, 1.0)
            adv = np.zeros_like(pts)
            for ax in range(3):
                e = np.zeros(3)
                e[ax] = h
                adv += b[:, ax : ax + 1] * (model.flow.value(pts + e) - model.flow.value(pts - e)) / (2 * h)
        coriolis = 2.0 * b @ C.T
        centrifugal = (pts @ C.T) @ C.T
        res = rho[:, None] * (adv + coriolis + centrifugal - grad_phi) + grad_p
        worst = max(worst, float(np.max(np.linalg.norm(res, axis=1))))
    return worst
