"""Pointwise matrix-sector diagnostics.

Well-posedness of the damped oscillation equations hinges on the
numerical range of the 3x3 matrices i*omega*gamma(x)*I + m1(x) (and the
m2 variant) staying inside a salient sector of the upper half plane.
This module computes:

* argument extrema of numerical ranges, sampled through the
  eigenvectors of the Hermitian/skew parts (which attain the real and
  imaginary extrema of the range) plus quasi-random unit vectors;
* the sector angle theta = max(0, sup_x |sup arg numran(i omega gamma I
  + m1)| - pi/2) over the coupling ball;
* the subsonic flow bound |b/c_s|^2 < 1/(1 + tan^2 theta);
* an admissible rotation angle beta maximizing the relevant
  half-plane margin (three variants: cowling / full / coupled);
* smooth radial phase profiles mu(r) with unit-modulus multiplier
  sigma(x) = exp(i mu(|x|) sign omega), in the two shapes needed for
  the one-region and two-region constructions;
* a pointwise sector check combining all of the above.

Everything here is a sampled numerical certificate, not a proof:
operator norms of multiplication operators are approximated by the
sampled supremum of the pointwise spectral norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .calculus import smoothstep_down
from .errors import ConfigError

_DEFAULT_SEED = 20240601


# ---------------------------------------------------------------------------
# Numerical range sampling
# ---------------------------------------------------------------------------

def _unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def range_samples(M: np.ndarray, n_directions: int = 1000, seed: int = _DEFAULT_SEED) -> np.ndarray:
    """Sample points of the numerical range {xi^H M xi : |xi| = 1}.

    Includes the eigenvectors of the Hermitian part (M + M^H)/2 and the
    skew part (M - M^H)/(2i), which attain the range's real and
    imaginary extrema, plus quasi-random complex unit vectors.
    """
    M = np.asarray(M, dtype=complex)
    herm = 0.5 * (M + M.conj().T)
    skew = (M - M.conj().T) / 2j
    vecs = [np.linalg.eigh(herm)[1], np.linalg.eigh(skew)[1]]
    xi = np.concatenate([v.T for v in vecs] + [_unit_vectors(np.random.default_rng(seed), n_directions)])
    return np.einsum("ni,ij,nj->n", xi.conj(), M, xi)


@dataclass
class AngleReport:
    """Argument extrema of numerical ranges over a sample of points."""

    per_point: list  # (location, arg_min, arg_max)
    arg_sup: float
    arg_inf: float
    sector_angle: float
    margin_to_half_pi: float
    attained_at: float
    inf_exceeds_sup: bool

    def to_dict(self):
        return {
            "arg_sup": self.arg_sup,
            "arg_inf": self.arg_inf,
            "sector_angle": self.sector_angle,
            "margin_to_half_pi": self.margin_to_half_pi,
            "attained_at": self.attained_at,
            "inf_exceeds_sup": self.inf_exceeds_sup,
            "n_points": len(self.per_point),
        }


def numerical_range_arg_extrema(matrix_field, points, n_directions: int = 1000, seed: int = _DEFAULT_SEED) -> AngleReport:
    """Argument extrema of numran(matrix_field(x)) over sample points.

    ``matrix_field`` maps a location (scalar radius or 3-vector,
    whatever the caller samples) to a 3x3 complex matrix.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one sample point")
    per_point = []
    sup, inf = -np.inf, np.inf
    attained = points[0]
    for loc in points:
        vals = range_samples(np.asarray(matrix_field(loc), dtype=complex), n_directions, seed)
        args = np.angle(vals)  # values in (-pi, pi]
        amax, amin = float(np.max(args)), float(np.min(args))
        per_point.append((loc, amin, amax))
        if abs(amax) > sup:
            attained = loc
        sup = max(sup, abs(amax))
        inf = min(inf, amin)
    theta = max(0.0, sup - np.pi / 2.0)
    return AngleReport(
        per_point=per_point,
        arg_sup=sup,
        arg_inf=inf,
        sector_angle=theta,
        margin_to_half_pi=float(np.pi / 2.0 - theta),
        attained_at=attained,
        inf_exceeds_sup=bool(abs(inf) > sup),
    )


def compute_sector_angle(model, n_radial: int = 2000, n_directions: int = 200, seed: int = _DEFAULT_SEED) -> float:
    """theta = max(0, sup_{r <= r2} |sup arg numran(i w gamma I + m1)| - pi/2)."""
    if model.omega == 0.0:
        raise ValueError("sector angle requires omega != 0")
    report = sector_angle_report(model, n_radial, n_directions, seed)
    return report.sector_angle


def sector_angle_report(model, n_radial: int = 2000, n_directions: int = 200, seed: int = _DEFAULT_SEED) -> AngleReport:
    if model.omega == 0.0:
        raise ValueError("sector angle requires omega != 0")
    rs = np.linspace(model.r2 * 1e-4, model.r2, n_radial)

    def field_at(r):
        m1_rr, m1_tt = model.m1_eigenvalues(r)
        shift = 1j * model.omega * model.gamma.value(r)
        return np.diag([m1_rr + shift, m1_tt + shift, m1_tt + shift])

    return numerical_range_arg_extrema(field_at, rs, n_directions, seed)


# ---------------------------------------------------------------------------
# Subsonic condition
# ---------------------------------------------------------------------------

@dataclass
class SubsonicReport:
    mach_squared: float
    bound: float
    passed: bool
    margin: float
    sector_angle: float

    def to_dict(self):
        return {
            "mach_squared": self.mach_squared,
            "bound": self.bound,
            "passed": bool(self.passed),
            "margin": self.margin,
            "sector_angle": self.sector_angle,
        }


def check_subsonic(model, sector_angle: float, n_radial: int = 2000) -> SubsonicReport:
    """Flow-speed bound sup|b/c_s|^2 < 1/(1 + tan^2 theta)."""
    if not 0.0 <= sector_angle < np.pi / 2.0:
        raise ValueError("sector angle must lie in [0, pi/2)")
    rs = np.linspace(model.r_max * 1e-6, model.r_max, n_radial)
    mach2 = float(np.max((model.flow.max_magnitude(rs) / model.cs.value(rs)) ** 2))
    bound = float(1.0 / (1.0 + np.tan(sector_angle) ** 2))
    return SubsonicReport(mach2, bound, mach2 < bound, bound - mach2, sector_angle)


# ---------------------------------------------------------------------------
# Rotation angle selection
# ---------------------------------------------------------------------------

@dataclass
class RotationAngleReport:
    variant: str
    beta: float | None
    margin: float
    admissible: bool
    notes: str = ""

    def to_dict(self):
        return {
            "variant": self.variant,
            "beta": self.beta,
            "margin": self.margin,
            "admissible": bool(self.admissible),
            "notes": self.notes,
        }


def _sampled_m2_norm(model, rs) -> float:
    """Sampled sup of the pointwise spectral norm of m2 (Hermitian case)."""
    if model.rotating:
        pts = rs[:, None] * np.array([[0.0, 0.0, 1.0]])
        m2 = model.fields_at(pts)["m2"]
        return float(max(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))) for m in m2))
    m2_rr, m2_tt = model.m2_eigenvalues(rs)
    return float(np.max(np.maximum(np.abs(m2_rr), np.abs(m2_tt))))


def select_rotation_angle(
    model,
    variant: str = "cowling",
    n_angles: int = 10_000,
    n_radial: int = 400,
    n_directions: int = 120,
    seed: int = _DEFAULT_SEED,
) -> RotationAngleReport:
    """Pick the rotation angle beta with the best half-plane margin.

    cowling / full: maximize Re(e^{-i beta}(|w| gamma_min - i * S)) over
    beta in (0, pi/2), where S is the sampled multiplication-operator
    norm of m2 (over everything for cowling, over the atmosphere for
    full; the nonlocal gravity contribution to the full variant is out
    of scope and omitted -- recorded in the notes).

    coupled: maximize the sampled infimum of
    Re(i sign(w) e^{-i beta sign w} numran((m2 + i w gamma)^{-1}))
    over beta in (-pi/2, 0), points in the atmosphere.
    """
    if model.omega == 0.0:
        return RotationAngleReport(variant, None, -np.inf, False, "omega = 0: no admissible angle")
    rs_all = np.linspace(model.r_max * 1e-6, model.r_max, n_radial)
    gamma_min = float(np.min(model.gamma.value(rs_all)))
    if gamma_min <= 0.0:
        return RotationAngleReport(variant, None, -np.inf, False, "gamma lower bound is zero")
    sign = np.sign(model.omega)

    if variant in ("cowling", "full"):
        rs = rs_all if variant == "cowling" else rs_all[rs_all >= model.r2]
        S = _sampled_m2_norm(model, rs)
        betas = np.linspace(1e-6, np.pi / 2.0 - 1e-6, n_angles)
        margins = np.real(np.exp(-1j * betas) * (abs(model.omega) * gamma_min - 1j * S))
        k = int(np.argmax(margins))
        notes = ""
        if variant == "full":
            notes = "nonlocal gravity term omitted from the operator norm (documented approximation)"
        return RotationAngleReport(variant, float(betas[k]), float(margins[k]), margins[k] > 0.0, notes)

    if variant != "coupled":
        raise ValueError(f"unknown variant {variant!r}")

    rs = np.linspace(model.r2, model.r_max, max(8, n_radial // 8))
    rng = np.random.default_rng(seed)
    samples = []
    for r in rs:
        if model.rotating:
            m2 = model.fields_at(np.array([[0.0, 0.0, r]]))["m2"][0]
        else:
            m2_rr, m2_tt = model.m2_eigenvalues(r)
            m2 = np.diag([m2_rr, m2_tt, m2_tt]).astype(complex)
        inv = np.linalg.inv(m2 + 1j * model.omega * model.gamma.value(r) * np.eye(3))
        samples.append(range_samples(inv, n_directions, seed=int(rng.integers(2**31))))
    vals = np.concatenate(samples)
    betas = np.linspace(-np.pi / 2.0 + 1e-6, -1e-6, n_angles)
    rot = 1j * sign * np.exp(-1j * betas * sign)
    margins = np.min(np.real(rot[:, None] * vals[None, :]), axis=1)
    k = int(np.argmax(margins))
    return RotationAngleReport("coupled", float(betas[k]), float(margins[k]), margins[k] > 0.0)


# ---------------------------------------------------------------------------
# Phase profiles
# ---------------------------------------------------------------------------

@dataclass
class PhaseProfile:
    """Smooth radial phase mu(r) driving the multiplier sigma = e^{i mu sign w}.

    variant "one-region": mu = 0 up to r1, rises monotonically to the
    plateau value on [r1, r2], constant beyond.
    variant "two-region": additionally descends from the interface value
    mu(r2) to the plateau on [r2, r3]; requires plateau <= mu(r2).
    """

    variant: str
    r1: float
    r2: float
    plateau: float
    sign_omega: float
    r3: float | None = None
    interface_value: float | None = None

    def __post_init__(self):
        if not 0.0 < self.r1 < self.r2:
            raise ConfigError("phase profile needs 0 < r1 < r2")
        if not 0.0 < self.plateau < np.pi:
            raise ConfigError("plateau value must lie in (0, pi)")
        if self.variant == "one-region":
            if self.interface_value is None:
                self.interface_value = self.plateau
            if self.interface_value != self.plateau:
                raise ConfigError("one-region profile has interface value equal to the plateau")
        elif self.variant == "two-region":
            if self.r3 is None or self.r3 <= self.r2:
                raise ConfigError("two-region profile needs r3 > r2")
            if self.interface_value is None:
                raise ConfigError("two-region profile needs an interface value")
            if not 0.0 < self.interface_value < np.pi:
                raise ConfigError("interface value must lie in (0, pi)")
            if self.plateau > self.interface_value:
                raise ConfigError(
                    "inconsistent targets: plateau exceeds interface value but the "
                    "profile must be non-increasing on the transition annulus"
                )
        else:
            raise ConfigError(f"unknown phase profile variant {self.variant!r}")

    def mu(self, r):
        r = np.asarray(r, dtype=float)
        rise = 1.0 - smoothstep_down((r - self.r1) / (self.r2 - self.r1))
        out = self.interface_value * rise
        if self.variant == "two-region":
            fall = smoothstep_down((r - self.r2) / (self.r3 - self.r2))
            beyond = self.plateau + (self.interface_value - self.plateau) * fall
            out = np.where(r <= self.r2, out, beyond)
        return out

    def sigma(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts**2, axis=1)) if pts.ndim == 2 else np.abs(pts)
        return np.exp(1j * self.mu(r) * self.sign_omega)

    @property
    def sigma_plateau(self) -> complex:
        return complex(np.exp(1j * self.plateau * self.sign_omega))

    def check_properties(self, n_samples: int = 10_000) -> dict:
        """Dense-sample certificate of the defining properties."""
        hi = (self.r3 if self.variant == "two-region" else self.r2) * 1.5
        rs = np.linspace(0.0, hi, n_samples)
        mu = self.mu(rs)
        inner = mu[rs <= self.r1]
        rise = mu[(rs >= self.r1) & (rs <= self.r2)]
        results = {
            "zero_inside_flow_ball": bool(np.all(inner == 0.0)),
            "non_decreasing_rise": bool(np.all(np.diff(rise) >= -1e-15)),
            "plateau_exact": bool(
                np.all(mu[rs >= (self.r3 if self.variant == "two-region" else self.r2)] == self.plateau)
            ),
            "endpoint_r1": float(self.mu(self.r1)),
            "endpoint_r2": float(self.mu(self.r2)),
            "unit_modulus_max_err": float(
                np.max(np.abs(np.abs(np.exp(1j * mu * self.sign_omega)) - 1.0))
            ),
        }
        if self.variant == "two-region":
            fall = mu[(rs >= self.r2) & (rs <= self.r3)]
            results["non_increasing_fall"] = bool(np.all(np.diff(fall) <= 1e-15))
            results["endpoint_r3"] = float(self.mu(self.r3))
        results["all_pass"] = all(v for k, v in results.items() if isinstance(v, bool))
        return results


def build_phase_profile(
    variant: str,
    r1: float,
    r2: float,
    plateau: float,
    sign_omega: float = 1.0,
    r3: float | None = None,
    interface_value: float | None = None,
) -> PhaseProfile:
    if variant == "one-region":
        interface_value = plateau
    return PhaseProfile(
        variant=variant,
        r1=r1,
        r2=r2,
        plateau=plateau,
        sign_omega=float(np.sign(sign_omega) or 1.0),
        r3=r3,
        interface_value=interface_value,
    )


# ---------------------------------------------------------------------------
# Pointwise sector check
# ---------------------------------------------------------------------------

@dataclass
class SectorCheckReport:
    worst_margin: float
    worst_location: float
    passed: bool
    n_points: int
    n_directions: int

    def to_dict(self):
        return {
            "worst_margin": self.worst_margin,
            "worst_location": self.worst_location,
            "passed": bool(self.passed),
            "n_points": self.n_points,
            "n_directions": self.n_directions,
        }


def pointwise_sector_check(
    model,
    profile: PhaseProfile,
    sector_angle: float,
    slack: float,
    n_radial: int = 300,
    n_directions: int = 200,
    seed: int = _DEFAULT_SEED,
) -> SectorCheckReport:
    """Check that the rotated quadratic-form values keep a half-plane margin.

    For sampled radii and unit vectors xi, the quantity

        sign(w) * arg( e^{-i (theta + tau + mu(r)) sign w}
                       * xi^H (i w gamma(r) I + m2(r)) xi )

    must stay inside (-pi/2, pi/2); the report carries the worst margin
    pi/2 - |arg| and its location.
    """
    if not sector_angle + slack < np.pi / 2.0:
        raise ValueError("need sector_angle + slack < pi/2")
    if model.omega == 0.0:
        raise ValueError("sector check requires omega != 0")
    sign = float(np.sign(model.omega))
    rs = np.linspace(model.r_max * 1e-4, model.r_max, n_radial)
    worst = np.inf
    worst_r = rs[0]
    rng = np.random.default_rng(seed)
    for r in rs:
        if model.rotating:
            m2 = model.fields_at(np.array([[0.0, 0.0, r]]))["m2"][0]
        else:
            m2_rr, m2_tt = model.m2_eigenvalues(r)
            m2 = np.diag([m2_rr, m2_tt, m2_tt]).astype(complex)
        M = m2 + 1j * model.omega * model.gamma.value(r) * np.eye(3)
        vals = range_samples(M, n_directions, seed=int(rng.integers(2**31)))
        phase = np.exp(-1j * (sector_angle + slack + profile.mu(r)) * sign)
        args = sign * np.angle(phase * vals)
        margin = float(np.pi / 2.0 - np.max(np.abs(args)))
        if margin < worst:
            worst, worst_r = margin, float(r)
    return SectorCheckReport(worst, worst_r, worst > 0.0, n_radial, n_directions)
