"""Mesh-free calculus: smooth compactly supported test fields and
high-order quadrature over balls and annuli.

Sesquilinear forms are evaluated by sampling closed-form fields at
product-rule quadrature nodes, so no finite element mesh is needed for
the identity checks.  A test field is a trivariate polynomial times a
radial C-infinity window; all derivatives up to second order are
analytic, computed from closed-form recurrences of the standard bump
exp(-1/(1-t^2)) and the smoothstep h(t)/(h(t)+h(1-t)), h(t)=exp(-1/t).

Angular quadrature is a product rule: Gauss-Legendre in cos(theta)
crossed with a uniform (trapezoidal) grid in phi, which integrates
trigonometric polynomials exactly.  Defaults integrate degree-20
spherical polynomials exactly.  Node sets are fixed at construction,
and integration is a deterministic weighted sum (numpy pairwise
summation), so results are run-to-run identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

_TINY_R = 1e-300  # guards 0/0 at the origin; fields are even there


# ---------------------------------------------------------------------------
# C-infinity primitives
# ---------------------------------------------------------------------------

def bump(t):
    """exp(-1/(1-t^2)) inside |t|<1, 0 outside."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    ts = np.where(inside, t, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - ts**2))[inside]
    return out


def bump_d1(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    ts = np.where(inside, t, 0.0)
    one = 1.0 - ts**2
    sp = -2.0 * ts / one**2
    out[inside] = (bump(ts) * sp)[inside]
    return out


def bump_d2(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    ts = np.where(inside, t, 0.0)
    one = 1.0 - ts**2
    sp = -2.0 * ts / one**2
    spp = -2.0 / one**2 - 8.0 * ts**2 / one**3
    out[inside] = (bump(ts) * (spp + sp**2))[inside]
    return out


def bump_d1_over_t(t):
    """bump'(t)/t = -2*bump(t)/(1-t^2)^2, finite at t=0."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    ts = np.where(inside, t, 0.0)
    out[inside] = (-2.0 * bump(ts) / (1.0 - ts**2) ** 2)[inside]
    return out


def _h(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0.0
    out = np.zeros_like(t)
    ts = np.where(pos, t, 1.0)
    out[pos] = np.exp(-1.0 / ts)[pos]
    return out


def _h_d1(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0.0
    out = np.zeros_like(t)
    ts = np.where(pos, t, 1.0)
    out[pos] = (np.exp(-1.0 / ts) / ts**2)[pos]
    return out


def _h_d2(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0.0
    out = np.zeros_like(t)
    ts = np.where(pos, t, 1.0)
    out[pos] = (np.exp(-1.0 / ts) * (1.0 / ts**4 - 2.0 / ts**3))[pos]
    return out


def smoothstep_down(t):
    """C-infinity monotone step from 1 (t<=0) to 0 (t>=1)."""
    t = np.asarray(t, dtype=float)
    f = _h(1.0 - t)
    g = _h(t)
    return f / (f + g)


def smoothstep_down_d1(t):
    t = np.asarray(t, dtype=float)
    f, g = _h(1.0 - t), _h(t)
    fp, gp = -_h_d1(1.0 - t), _h_d1(t)
    d = f + g
    return (fp * g - f * gp) / d**2


def smoothstep_down_d2(t):
    t = np.asarray(t, dtype=float)
    f, g = _h(1.0 - t), _h(t)
    fp, gp = -_h_d1(1.0 - t), _h_d1(t)
    fpp, gpp = _h_d2(1.0 - t), _h_d2(t)
    d = f + g
    n = fp * g - f * gp
    return (fpp * g - f * gpp) / d**2 - 2.0 * n * (fp + gp) / d**3


# ---------------------------------------------------------------------------
# Radial windows
# ---------------------------------------------------------------------------

class RadialWindow:
    """Radial cutoff w(r) with two derivatives; w and w', w'' vanish
    identically outside ``support``."""

    support: tuple[float, float]

    def value(self, r):
        raise NotImplementedError

    def d1(self, r):
        raise NotImplementedError

    def d2(self, r):
        raise NotImplementedError

    def d1_over_r(self, r):
        """w'(r)/r, with the correct finite limit at r=0."""
        r = np.asarray(r, dtype=float)
        return self.d1(r) / np.maximum(r, _TINY_R)


class BallWindow(RadialWindow):
    """Even bump on the ball of radius R, normalized to 1 at the origin.

    As a function of x it is smooth everywhere (a function of r^2).
    """

    def __init__(self, R: float):
        if R <= 0:
            raise ValueError("ball window radius must be positive")
        self.R = float(R)
        self.support = (0.0, self.R)
        self._b0 = float(bump(0.0))

    def value(self, r):
        return bump(np.asarray(r, dtype=float) / self.R) / self._b0

    def d1(self, r):
        return bump_d1(np.asarray(r, dtype=float) / self.R) / (self.R * self._b0)

    def d2(self, r):
        return bump_d2(np.asarray(r, dtype=float) / self.R) / (self.R**2 * self._b0)

    def d1_over_r(self, r):
        t = np.asarray(r, dtype=float) / self.R
        return bump_d1_over_t(t) / (self.R**2 * self._b0)


class AnnulusWindow(RadialWindow):
    """Bump supported on the annulus a < r < b, peak 1 at the midpoint."""

    def __init__(self, a: float, b: float):
        if not 0.0 < a < b:
            raise ValueError("annulus window needs 0 < a < b")
        self.a, self.b = float(a), float(b)
        self.support = (self.a, self.b)
        self._b0 = float(bump(0.0))

    def _t(self, r):
        return (2.0 * np.asarray(r, dtype=float) - (self.a + self.b)) / (self.b - self.a)

    def value(self, r):
        return bump(self._t(r)) / self._b0

    def d1(self, r):
        return bump_d1(self._t(r)) * (2.0 / (self.b - self.a)) / self._b0

    def d2(self, r):
        return bump_d2(self._t(r)) * (2.0 / (self.b - self.a)) ** 2 / self._b0


class PlateauWindow(RadialWindow):
    """1 on [0, flat_until], smooth decay to 0 on [flat_until, zero_from].

    Used for fields that must carry a nonzero trace at an interface
    radius while still having bounded support.
    """

    def __init__(self, flat_until: float, zero_from: float):
        if not 0.0 < flat_until < zero_from:
            raise ValueError("plateau window needs 0 < flat_until < zero_from")
        self.c, self.d = float(flat_until), float(zero_from)
        self.support = (0.0, self.d)

    def _t(self, r):
        return (np.asarray(r, dtype=float) - self.c) / (self.d - self.c)

    def value(self, r):
        return smoothstep_down(self._t(r))

    def d1(self, r):
        return smoothstep_down_d1(self._t(r)) / (self.d - self.c)

    def d2(self, r):
        return smoothstep_down_d2(self._t(r)) / (self.d - self.c) ** 2


# ---------------------------------------------------------------------------
# Trivariate polynomials
# ---------------------------------------------------------------------------

class Polynomial3:
    """Sparse trivariate polynomial sum c_{ijk} x^i y^j z^k."""

    def __init__(self, terms: dict[tuple[int, int, int], complex]):
        self.terms = {k: complex(v) for k, v in terms.items() if v != 0}

    @classmethod
    def constant(cls, c) -> "Polynomial3":
        return cls({(0, 0, 0): c})

    def eval(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[0], dtype=complex)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        for (i, j, k), c in self.terms.items():
            out += c * x**i * y**j * z**k
        return out

    def deriv(self, axis: int) -> "Polynomial3":
        new = {}
        for (i, j, k), c in self.terms.items():
            exps = [i, j, k]
            if exps[axis] == 0:
                continue
            coeff = c * exps[axis]
            exps[axis] -= 1
            key = tuple(exps)
            new[key] = new.get(key, 0) + coeff
        return Polynomial3(new)

    def __repr__(self):
        return f"Polynomial3({self.terms})"


# ---------------------------------------------------------------------------
# Test fields
# ---------------------------------------------------------------------------

def _radius(pts):
    return np.sqrt(np.sum(np.asarray(pts, dtype=float) ** 2, axis=1))


class ScalarTestField:
    """poly(x) * window(|x|) with analytic value/grad/hess/laplacian."""

    is_vector = False

    def __init__(self, poly: Polynomial3, window: RadialWindow):
        self.poly = poly
        self.window = window
        self.support = window.support
        self._grad_polys = [poly.deriv(ax) for ax in range(3)]
        self._hess_polys = [[self._grad_polys[a].deriv(b) for b in range(3)] for a in range(3)]

    def value(self, pts):
        r = _radius(pts)
        return self.poly.eval(pts) * self.window.value(r)

    def grad(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = _radius(pts)
        w = self.window.value(r)
        w1r = self.window.d1_over_r(r)
        p = self.poly.eval(pts)
        out = np.empty((pts.shape[0], 3), dtype=complex)
        for ax in range(3):
            out[:, ax] = self._grad_polys[ax].eval(pts) * w + p * w1r * pts[:, ax]
        return out

    def hess(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = pts.shape[0]
        r = _radius(pts)
        w = self.window.value(r)
        w2 = self.window.d2(r)
        w1r = self.window.d1_over_r(r)
        p = self.poly.eval(pts)
        gp = np.stack([g.eval(pts) for g in self._grad_polys], axis=1)
        # at r=0 (even windows) w2 - w1r -> 0, so the x^ x^T term vanishes
        xhat = pts / np.maximum(r, _TINY_R)[:, None]
        out = np.empty((n, 3, 3), dtype=complex)
        for a in range(3):
            for b in range(3):
                out[:, a, b] = (
                    self._hess_polys[a][b].eval(pts) * w
                    + gp[:, a] * w1r * pts[:, b]
                    + gp[:, b] * w1r * pts[:, a]
                    + p * ((w2 - w1r) * xhat[:, a] * xhat[:, b] + (a == b) * w1r)
                )
        return out

    def laplacian(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = _radius(pts)
        w = self.window.value(r)
        w2 = self.window.d2(r)
        w1r = self.window.d1_over_r(r)
        p = self.poly.eval(pts)
        lap_p = sum(self._hess_polys[a][a].eval(pts) for a in range(3))
        x_dot_gp = sum(self._grad_polys[a].eval(pts) * pts[:, a] for a in range(3))
        return lap_p * w + 2.0 * w1r * x_dot_gp + p * (w2 + 2.0 * w1r)


class VectorTestField:
    """Three scalar components; exposes jacobian, divergence, curl."""

    is_vector = True

    def __init__(self, components):
        if len(components) != 3:
            raise ValueError("vector field needs exactly 3 components")
        self.components = tuple(components)
        lo = min(c.support[0] for c in components)
        hi = max(c.support[1] for c in components)
        self.support = (lo, hi)

    def value(self, pts):
        return np.stack([c.value(pts) for c in self.components], axis=1)

    def jacobian(self, pts):
        """J[n, i, l] = d u_i / d x_l."""
        return np.stack([c.grad(pts) for c in self.components], axis=1)

    def div(self, pts):
        jac = self.jacobian(pts)
        return jac[:, 0, 0] + jac[:, 1, 1] + jac[:, 2, 2]

    def curl(self, pts):
        j = self.jacobian(pts)
        out = np.empty(j.shape[:1] + (3,), dtype=complex)
        out[:, 0] = j[:, 2, 1] - j[:, 1, 2]
        out[:, 1] = j[:, 0, 2] - j[:, 2, 0]
        out[:, 2] = j[:, 1, 0] - j[:, 0, 1]
        return out


class ScalarCombination:
    """Linear combination of scalar fields (same evaluator protocol)."""

    is_vector = False

    def __init__(self, pairs):
        self.pairs = [(complex(c), f) for c, f in pairs]
        self.support = (
            min(f.support[0] for _, f in pairs),
            max(f.support[1] for _, f in pairs),
        )

    def value(self, pts):
        return sum(c * f.value(pts) for c, f in self.pairs)

    def grad(self, pts):
        return sum(c * f.grad(pts) for c, f in self.pairs)

    def hess(self, pts):
        return sum(c * f.hess(pts) for c, f in self.pairs)

    def laplacian(self, pts):
        return sum(c * f.laplacian(pts) for c, f in self.pairs)


class VectorCombination:
    is_vector = True

    def __init__(self, pairs):
        self.pairs = [(complex(c), f) for c, f in pairs]
        self.support = (
            min(f.support[0] for _, f in pairs),
            max(f.support[1] for _, f in pairs),
        )

    def value(self, pts):
        return sum(c * f.value(pts) for c, f in self.pairs)

    def jacobian(self, pts):
        return sum(c * f.jacobian(pts) for c, f in self.pairs)

    def div(self, pts):
        return sum(c * f.div(pts) for c, f in self.pairs)

    def curl(self, pts):
        return sum(c * f.curl(pts) for c, f in self.pairs)


class ZeroField:
    """The zero field, scalar or vector depending on ``is_vector``."""

    def __init__(self, is_vector: bool):
        self.is_vector = is_vector
        self.support = (0.0, 0.0)

    def value(self, pts):
        n = np.asarray(pts).shape[0]
        return np.zeros((n, 3), dtype=complex) if self.is_vector else np.zeros(n, dtype=complex)

    def grad(self, pts):
        return np.zeros((np.asarray(pts).shape[0], 3), dtype=complex)

    def hess(self, pts):
        return np.zeros((np.asarray(pts).shape[0], 3, 3), dtype=complex)

    def laplacian(self, pts):
        return np.zeros(np.asarray(pts).shape[0], dtype=complex)

    def jacobian(self, pts):
        return np.zeros((np.asarray(pts).shape[0], 3, 3), dtype=complex)

    def div(self, pts):
        return np.zeros(np.asarray(pts).shape[0], dtype=complex)

    def curl(self, pts):
        return np.zeros((np.asarray(pts).shape[0], 3), dtype=complex)


def radial_vector_field(window: RadialWindow, coeff: complex = 1.0) -> VectorTestField:
    """u(x) = coeff * w(|x|) * x, i.e. u_r = coeff * r * w(r) radially."""
    comps = []
    for ax in range(3):
        key = tuple(1 if a == ax else 0 for a in range(3))
        comps.append(ScalarTestField(Polynomial3({key: coeff}), window))
    return VectorTestField(comps)


def random_polynomial(rng: np.random.Generator, degree: int = 2, real: bool = False) -> Polynomial3:
    terms = {}
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            for k in range(degree + 1 - i - j):
                c = rng.standard_normal()
                if not real:
                    c = c + 1j * rng.standard_normal()
                terms[(i, j, k)] = c
    return Polynomial3(terms)


def random_scalar_field(rng, window: RadialWindow, degree: int = 2, real: bool = False):
    return ScalarTestField(random_polynomial(rng, degree, real=real), window)


def random_vector_field(rng, window: RadialWindow, degree: int = 2, real: bool = False):
    return VectorTestField([random_scalar_field(rng, window, degree, real=real) for _ in range(3)])


# ---------------------------------------------------------------------------
# Directional derivative along a flow
# ---------------------------------------------------------------------------

class DirectionalDerivative:
    """(b . grad) applied componentwise; evaluator only."""

    def __init__(self, fld, flow):
        self.field = fld
        self.flow = flow
        self.support = fld.support
        self.is_vector = fld.is_vector

    def value(self, pts):
        b = self.flow.value(pts)
        if self.field.is_vector:
            jac = self.field.jacobian(pts)
            return np.einsum("nil,nl->ni", jac, b.astype(complex))
        grad = self.field.grad(pts)
        return np.einsum("nl,nl->n", grad, b.astype(complex))


def directional_derivative(fld, flow) -> DirectionalDerivative:
    """Evaluator for (b . grad) u, applied componentwise to vectors."""
    return DirectionalDerivative(fld, flow)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Fixed node/weight rule over a ball, annulus, or sphere surface.

    ``points`` has shape (N, 3) and ``weights`` (N,), with the volume
    (or surface) Jacobian already folded into the weights.
    """

    domain: str
    params: tuple
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    orders: tuple = ()

    @property
    def radial_interval(self) -> tuple[float, float]:
        if self.domain == "ball":
            return (0.0, self.params[0])
        if self.domain == "annulus":
            return self.params
        return (self.params[0], self.params[0])

    def refined(self, factor: int = 2) -> "QuadratureRule":
        n_r, n_theta, n_phi = self.orders
        if self.domain == "ball":
            return ball_rule(self.params[0], factor * n_r, factor * n_theta, factor * n_phi)
        if self.domain == "annulus":
            return annulus_rule(*self.params, factor * n_r, factor * n_theta, factor * n_phi)
        return sphere_rule(self.params[0], factor * n_theta, factor * n_phi)


def _angular_nodes(n_theta: int, n_phi: int):
    mu, w_mu = leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2.0 * np.pi / n_phi)
    mu_g, phi_g = np.meshgrid(mu, phi, indexing="ij")
    w_ang = np.outer(w_mu, w_phi).ravel()
    sin_t = np.sqrt(1.0 - mu_g.ravel() ** 2)
    dirs = np.stack(
        [sin_t * np.cos(phi_g.ravel()), sin_t * np.sin(phi_g.ravel()), mu_g.ravel()],
        axis=1,
    )
    return dirs, w_ang


def _radial_nodes(a: float, b: float, n_r: int):
    x, w = leggauss(n_r)
    r = 0.5 * (b - a) * x + 0.5 * (b + a)
    wr = 0.5 * (b - a) * w
    return r, wr


def ball_rule(R: float, n_r: int = 128, n_theta: int = 12, n_phi: int = 24) -> QuadratureRule:
    r, wr = _radial_nodes(0.0, R, n_r)
    dirs, w_ang = _angular_nodes(n_theta, n_phi)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    wts = (wr * r**2)[:, None] * w_ang[None, :]
    return QuadratureRule("ball", (R,), pts, wts.ravel(), (n_r, n_theta, n_phi))


def annulus_rule(a: float, b: float, n_r: int = 128, n_theta: int = 12, n_phi: int = 24) -> QuadratureRule:
    if not 0.0 <= a < b:
        raise ValueError("annulus needs 0 <= a < b")
    r, wr = _radial_nodes(a, b, n_r)
    dirs, w_ang = _angular_nodes(n_theta, n_phi)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    wts = (wr * r**2)[:, None] * w_ang[None, :]
    return QuadratureRule("annulus", (a, b), pts, wts.ravel(), (n_r, n_theta, n_phi))


def sphere_rule(R: float, n_theta: int = 12, n_phi: int = 24) -> QuadratureRule:
    dirs, w_ang = _angular_nodes(n_theta, n_phi)
    return QuadratureRule("sphere", (R,), R * dirs, R**2 * w_ang, (0, n_theta, n_phi))


def integrate(rule: QuadratureRule, integrand) -> complex:
    """Weighted sum of ``integrand(points)`` over the rule's nodes."""
    vals = np.asarray(integrand(rule.points))
    return complex(np.sum(rule.weights * vals))
