"""Radial coefficient profiles for stellar background models.

Every physical background field (density, sound speed, pressure,
gravitational potential, damping) is a function of radius alone.  A
profile exposes the value and the first two radial derivatives, which
is exactly what the derived coefficient fields (pressure-gradient
vector, curvature matrices) consume.

Supported kinds:

* ``exponential``  -- C * exp(-alpha * r), the standard isothermal
  atmosphere tail.  Derivatives are closed form.
* ``polynomial``   -- sum_k c_k r^k with ascending coefficients.
* ``constant``     -- shorthand for a degree-0 polynomial.
* ``tabulated``    -- (r_i, f_i) samples.  Order 1 uses linear
  interpolation (derivative piecewise constant, second derivative 0);
  order 3 uses monotone cubic (PCHIP) interpolation, which is C^1 and
  does not overshoot, so the second derivative exists a.e. but is only
  "low trust" and flagged as such in validation reports.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError


class RadialProfile:
    """Base class: value and two radial derivatives on [0, inf)."""

    kind = "abstract"
    #: second derivatives of tabulated data come from the interpolant
    #: and should not be over-trusted; analytic profiles are exact
    d2_trusted = True

    def value(self, r):
        raise NotImplementedError

    def d1(self, r):
        raise NotImplementedError

    def d2(self, r):
        raise NotImplementedError

    def __call__(self, r):
        return self.value(r)


class ExponentialProfile(RadialProfile):
    """C * exp(-alpha * r)."""

    kind = "exponential"

    def __init__(self, C: float, alpha: float):
        self.C = float(C)
        self.alpha = float(alpha)

    def value(self, r):
        return self.C * np.exp(-self.alpha * np.asarray(r, dtype=float))

    def d1(self, r):
        return -self.alpha * self.value(r)

    def d2(self, r):
        return self.alpha**2 * self.value(r)

    def __repr__(self):
        return f"ExponentialProfile(C={self.C}, alpha={self.alpha})"


class PolynomialProfile(RadialProfile):
    """sum_k coeffs[k] * r^k, coefficients in ascending order."""

    kind = "polynomial"

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ConfigError("polynomial profile needs a 1d coefficient list")
        self._poly = np.polynomial.Polynomial(self.coeffs)
        self._d1 = self._poly.deriv(1)
        self._d2 = self._poly.deriv(2)

    def value(self, r):
        return self._poly(np.asarray(r, dtype=float))

    def d1(self, r):
        return self._d1(np.asarray(r, dtype=float))

    def d2(self, r):
        return self._d2(np.asarray(r, dtype=float))

    def __repr__(self):
        return f"PolynomialProfile({list(self.coeffs)})"


def constant_profile(value: float) -> PolynomialProfile:
    return PolynomialProfile([float(value)])


class TabulatedProfile(RadialProfile):
    """Interpolated (r_i, f_i) table; order 1 (linear) or 3 (PCHIP)."""

    kind = "tabulated"
    d2_trusted = False

    def __init__(self, grid, values, order: int = 3):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ConfigError("tabulated profile needs matching 1d grid/values")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("tabulated profile grid must be strictly increasing")
        if order not in (1, 3):
            raise ConfigError(f"unsupported interpolation order {order}")
        self.grid = grid
        self.values = values
        self.order = order
        if order == 3:
            self._interp = PchipInterpolator(grid, values, extrapolate=False)
            self._interp_d1 = self._interp.derivative(1)
            self._interp_d2 = self._interp.derivative(2)

    def _check_range(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.grid[0]) or np.any(r > self.grid[-1]):
            raise ConfigError(
                f"radius outside tabulated range [{self.grid[0]}, {self.grid[-1]}]"
            )
        return r

    def value(self, r):
        r = self._check_range(r)
        if self.order == 1:
            return np.interp(r, self.grid, self.values)
        return self._interp(r)

    def d1(self, r):
        r = self._check_range(r)
        if self.order == 1:
            slopes = np.diff(self.values) / np.diff(self.grid)
            idx = np.clip(np.searchsorted(self.grid, r, side="right") - 1, 0, len(slopes) - 1)
            return slopes[idx]
        return self._interp_d1(r)

    def d2(self, r):
        r = self._check_range(r)
        if self.order == 1:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self._interp_d2(r)

    def __repr__(self):
        return f"TabulatedProfile(n={self.grid.size}, order={self.order})"


def profile_from_config(doc, base_dir=None) -> RadialProfile:
    """Build a profile from a config fragment.

    Tabulated profiles take either inline ``r``/``values`` arrays or a
    ``csv`` path to a two-column file (r, value) with '#' comments.
    """
    if isinstance(doc, (int, float)):
        return constant_profile(doc)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"profile config must be a number or a dict with 'kind': {doc!r}")
    kind = doc["kind"]
    try:
        if kind == "exponential":
            return ExponentialProfile(doc["C"], doc["alpha"])
        if kind == "polynomial":
            return PolynomialProfile(doc["coeffs"])
        if kind == "constant":
            return constant_profile(doc["value"])
        if kind == "tabulated":
            order = int(doc.get("order", 3))
            if "csv" in doc:
                import os

                path = doc["csv"]
                if base_dir is not None and not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                try:
                    data = np.loadtxt(path, comments="#", delimiter=",")
                except OSError as exc:
                    raise ConfigError(f"cannot read profile csv {path}: {exc}") from exc
                if data.ndim != 2 or data.shape[1] != 2:
                    raise ConfigError(f"profile csv {path} must have two columns (r, value)")
                return TabulatedProfile(data[:, 0], data[:, 1], order=order)
            return TabulatedProfile(doc["r"], doc["values"], order=order)
    except KeyError as exc:
        raise ConfigError(f"profile config missing field {exc} in {doc!r}") from exc
    raise ConfigError(f"unknown profile kind {kind!r}")
