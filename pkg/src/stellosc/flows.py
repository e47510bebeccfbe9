"""Background flow fields with compact support inside the inner ball.

The mass-flux constraint div(rho*b) = 0 is what makes the advection
operator i*(b.grad) formally selfadjoint, so flows are built as
rho*b = curl(chi(r) e_z), which is divergence free by construction:
with g(r) = chi'(r)/r this gives rho*b = g(r) * (x2, -x1, 0), an
azimuthal flow.  A deliberately non-solenoidal radial flow is provided
as a negative control for the symmetry checks.
"""

from __future__ import annotations

import numpy as np

from .calculus import bump, bump_d1
from .errors import ConfigError


class FlowField:
    """Closed-form background velocity; vanishes for r >= support_radius."""

    support_radius: float

    def value(self, pts) -> np.ndarray:
        raise NotImplementedError

    def div_rho_b(self, pts) -> np.ndarray:
        """div(rho * b) in closed form."""
        raise NotImplementedError

    def max_magnitude(self, r) -> np.ndarray:
        """sup over the sphere of radius r of |b|."""
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


class ZeroFlow(FlowField):
    support_radius = 0.0

    def value(self, pts):
        return np.zeros((np.asarray(pts).shape[0], 3))

    def div_rho_b(self, pts):
        return np.zeros(np.asarray(pts).shape[0])

    def max_magnitude(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def is_zero(self):
        return True


class ToroidalFlow(FlowField):
    """b = (g(r)/rho(r)) * (x2, -x1, 0) with g a radial bump on (r_lo, r_hi).

    rho*b is a curl, so div(rho*b) = 0 exactly.  Needs the density
    profile to divide out; the flow support must stay inside the ball
    where the model requires b to vanish outside.
    """

    def __init__(self, amplitude: float, r_lo: float, r_hi: float, rho_profile):
        if not 0.0 <= r_lo < r_hi:
            raise ConfigError("toroidal flow needs 0 <= r_lo < r_hi")
        self.amplitude = float(amplitude)
        self.r_lo, self.r_hi = float(r_lo), float(r_hi)
        self.rho = rho_profile
        self.support_radius = self.r_hi

    def _g(self, r):
        # even bump in the shifted radial variable keeps g smooth at r=0
        t = (2.0 * np.asarray(r, dtype=float) - (self.r_lo + self.r_hi)) / (self.r_hi - self.r_lo)
        return self.amplitude * bump(t) / bump(0.0)

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts**2, axis=1))
        g = self._g(r) / self.rho.value(r)
        out = np.zeros_like(pts)
        out[:, 0] = g * pts[:, 1]
        out[:, 1] = -g * pts[:, 0]
        return out

    def div_rho_b(self, pts):
        return np.zeros(np.asarray(pts).shape[0])

    def max_magnitude(self, r):
        r = np.asarray(r, dtype=float)
        return np.abs(self._g(r)) * r / self.rho.value(r)


class RadialBumpFlow(FlowField):
    """b = h(r) x^ with a radial bump h; div(rho*b) != 0 (negative control)."""

    def __init__(self, amplitude: float, r_lo: float, r_hi: float, rho_profile):
        if not 0.0 < r_lo < r_hi:
            raise ConfigError("radial flow needs 0 < r_lo < r_hi")
        self.amplitude = float(amplitude)
        self.r_lo, self.r_hi = float(r_lo), float(r_hi)
        self.rho = rho_profile
        self.support_radius = self.r_hi

    def _t(self, r):
        return (2.0 * np.asarray(r, dtype=float) - (self.r_lo + self.r_hi)) / (self.r_hi - self.r_lo)

    def _h(self, r):
        return self.amplitude * bump(self._t(r)) / bump(0.0)

    def _h_d1(self, r):
        scale = 2.0 / (self.r_hi - self.r_lo)
        return self.amplitude * bump_d1(self._t(r)) * scale / bump(0.0)

    def value(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts**2, axis=1))
        h_over_r = self._h(r) / np.maximum(r, 1e-300)
        return h_over_r[:, None] * pts

    def div_rho_b(self, pts):
        # div(rho h x^) = (rho h)' + 2 rho h / r
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts**2, axis=1))
        rho = self.rho.value(r)
        drho = self.rho.d1(r)
        h = self._h(r)
        return drho * h + rho * self._h_d1(r) + 2.0 * rho * h / np.maximum(r, 1e-300)

    def max_magnitude(self, r):
        return np.abs(self._h(np.asarray(r, dtype=float)))


class ConstantFlow(FlowField):
    """Spatially constant b; handy for directional-derivative tests only."""

    def __init__(self, b):
        self.b = np.asarray(b, dtype=float)
        self.support_radius = np.inf

    def value(self, pts):
        return np.broadcast_to(self.b, (np.asarray(pts).shape[0], 3)).copy()

    def div_rho_b(self, pts):
        raise NotImplementedError("constant flow has no model density attached")

    def max_magnitude(self, r):
        return np.full_like(np.asarray(r, dtype=float), np.linalg.norm(self.b))


def flow_from_config(doc, rho_profile) -> FlowField:
    if doc is None:
        return ZeroFlow()
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"flow config must be a dict with 'kind': {doc!r}")
    kind = doc["kind"]
    try:
        if kind == "zero":
            return ZeroFlow()
        if kind == "toroidal":
            return ToroidalFlow(doc["amplitude"], doc["r_lo"], doc["r_hi"], rho_profile)
        if kind == "radial-bump":
            return RadialBumpFlow(doc["amplitude"], doc["r_lo"], doc["r_hi"], rho_profile)
    except KeyError as exc:
        raise ConfigError(f"flow config missing field {exc} in {doc!r}") from exc
    raise ConfigError(f"unknown flow kind {kind!r}")
