"""Explicit objects of the Hardy operator L_mu = -Delta + mu/|x|^2 on the half-space.

Points are Cartesian arrays of shape (..., N) with x_N > 0. The first half-sphere
mode is fixed as psi_1(sigma) = sigma_N, so that gamma_mu and phi_mu equal
r^alpha on the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtri

from .errors import BadIndex, CriticalRange, MuBelowCritical, QuadratureUnconverged
from .extrapolate import richardson

_CRIT_TOL = 1e-12


def critical_mu(N: int) -> float:
    return -(N**2) / 4.0


def alpha_exponents(mu: float, N: int) -> tuple[float, float]:
    """Roots of a^2 + (N-2) a - (N-1) - mu = 0, ordered (alpha_plus, alpha_minus)."""
    disc = mu + N**2 / 4.0
    if disc < -_CRIT_TOL * max(1.0, abs(mu)):
        raise MuBelowCritical(f"mu={mu} is below the critical value {critical_mu(N)}", mu=mu, N=N)
    root = math.sqrt(max(disc, 0.0))
    base = (2.0 - N) / 2.0
    return base + root, base - root


def mode_eigenvalue(k: int, N: int) -> float:
    """Dirichlet eigenvalue k(N+k-2) of the k-th half-sphere mode."""
    if int(k) != k or k < 1:
        raise BadIndex(f"mode index must be a positive integer, got {k}", k=k)
    return float(k * (N + k - 2))


@dataclass(frozen=True)
class SpectralParams:
    mu: float
    dim: int
    mu1: float = field(init=False)
    alpha_plus: float = field(init=False)
    alpha_minus: float = field(init=False)
    critical: bool = field(init=False)

    def __post_init__(self):
        if self.dim < 2:
            raise BadIndex("dimension must be at least 2", N=self.dim)
        ap, am = alpha_exponents(self.mu, self.dim)
        object.__setattr__(self, "mu1", critical_mu(self.dim))
        object.__setattr__(self, "alpha_plus", ap)
        object.__setattr__(self, "alpha_minus", am)
        object.__setattr__(self, "critical", abs(self.mu - self.mu1) <= _CRIT_TOL * max(1.0, abs(self.mu1)))

    @property
    def gap(self) -> float:
        """sqrt(mu - mu1) = (alpha_plus - alpha_minus)/2."""
        return math.sqrt(max(self.mu - self.mu1, 0.0))


@dataclass(frozen=True)
class HalfSphereMode:
    k: int
    dim: int
    lambda_k: float
    alpha_k_plus: float
    alpha_k_minus: float


def half_sphere_mode(k: int, sp: SpectralParams) -> HalfSphereMode:
    lam = mode_eigenvalue(k, sp.dim)
    N = sp.dim
    disc = sp.mu + lam + (N - 2) ** 2 / 4.0
    if disc < 0:
        raise MuBelowCritical("mode exponents are complex", k=k, mu=sp.mu)
    root = math.sqrt(disc)
    return HalfSphereMode(k, N, lam, (2.0 - N) / 2.0 + root, (2.0 - N) / 2.0 - root)


def exponent_polynomial(a, sp: SpectralParams, k: int = 1):
    """P_k(a) = a^2 + (N-2) a - lambda_k - mu."""
    return a * a + (sp.dim - 2) * a - mode_eigenvalue(k, sp.dim) - sp.mu


def psi1(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., -1] / np.linalg.norm(x, axis=-1)


def _polar(x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return x, r, x[..., -1] / r


def gamma_mu(x, sp: SpectralParams) -> np.ndarray:
    """r^{alpha_plus} psi_1(sigma)."""
    _, r, s = _polar(x)
    return r**sp.alpha_plus * s


def phi_mu(x, sp: SpectralParams) -> np.ndarray:
    """r^{alpha_minus} psi_1, or r^{(2-N)/2} ln(1/r) psi_1 at the critical value (r < 1 only)."""
    _, r, s = _polar(x)
    if sp.critical:
        if np.any(r >= 1.0):
            raise CriticalRange("the logarithmic branch is only defined for r < 1")
        return r ** ((2.0 - sp.dim) / 2.0) * np.log(1.0 / r) * s
    return r**sp.alpha_minus * s


def _radial_profile(r, sp: SpectralParams, which: str, exponent: float | None):
    """f, f', f'' with u = x_N f(r)."""
    if which == "phi" and sp.critical:
        b = -sp.dim / 2.0
        L = np.log(1.0 / r)
        f = r**b * L
        f1 = b * r ** (b - 1) * L - r ** (b - 1)
        f2 = b * (b - 1) * r ** (b - 2) * L - (2 * b - 1) * r ** (b - 2)
        return f, f1, f2
    if exponent is None:
        exponent = sp.alpha_plus if which == "gamma" else sp.alpha_minus
    b = exponent - 1.0
    return r**b, b * r ** (b - 1), b * (b - 1) * r ** (b - 2)


def apply_Lmu_separable(x, sp: SpectralParams, which: str = "gamma", exponent: float | None = None):
    """L_mu applied to x_N f(|x|) through the Cartesian identity
    Delta(x_N f) = x_N (f'' + (N+1) f'/r)."""
    x, r, _ = _polar(x)
    f, f1, f2 = _radial_profile(r, sp, which, exponent)
    xn = x[..., -1]
    lap = xn * (f2 + (sp.dim + 1) * f1 / r)
    # scale from the separate terms, so exact cancellation (mu = 0) is not divided by roundoff
    scale = np.abs(xn) * (np.abs(f2) + (sp.dim + 1) * np.abs(f1) / r) + abs(sp.mu) * np.abs(xn * f) / r**2
    return -lap + sp.mu * xn * f / r**2, scale


def residual_Lmu_separable(x, sp: SpectralParams, which: str = "gamma", exponent: float | None = None):
    """Relative pointwise residual |L_mu u| / (|x_N| (|f''| + (N+1)|f'|/r) + |mu u|/r^2).

    ``which`` selects gamma_mu or phi_mu; ``exponent`` overrides the power for
    probes r^a psi_1 that are not solutions.
    """
    val, scale = apply_Lmu_separable(x, sp, which, exponent)
    return np.abs(val) / np.where(scale > 0, scale, 1.0)


# ---------------------------------------------------------------- test functions


@dataclass(frozen=True)
class TestFunctionRadial:
    """zeta(x) = g(|x|^2) with g supported in [0, s_max]."""

    g: Callable
    dg: Callable
    d2g: Callable
    s_max: float
    name: str = "radial"

    def _s(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,...i->...", x, x)

    def value(self, x):
        return self.g(self._s(x))

    def at_origin(self) -> float:
        return float(self.g(np.array(0.0)))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.dg(self._s(x))[..., None] * x

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        s = self._s(x)
        return 2 * x.shape[-1] * self.dg(s) + 4 * s * self.d2g(s)

    def lstar_halfspace(self, x, sp: SpectralParams):
        """-Delta zeta - (2/gamma_mu) <grad gamma_mu, grad zeta>, closed form."""
        s = self._s(x)
        return -(2 * sp.dim * self.dg(s) + 4 * s * self.d2g(s)) - 4 * sp.alpha_plus * self.dg(s)

    def scaled(self, factor: float) -> "TestFunctionRadial":
        g, dg, d2g = self.g, self.dg, self.d2g
        return TestFunctionRadial(
            lambda s: factor * g(s), lambda s: factor * dg(s), lambda s: factor * d2g(s),
            self.s_max, f"{factor}*{self.name}",
        )


def bump_profile(s_max: float = 1.0, power: int = 3, amplitude: float = 1.0) -> TestFunctionRadial:
    """g(s) = A (1 - s/s_max)_+^p. Power 3 gives a Lipschitz second derivative."""
    p = int(power)

    def g(s):
        t = np.clip(1.0 - np.asarray(s) / s_max, 0.0, None)
        return amplitude * t**p

    def dg(s):
        t = np.clip(1.0 - np.asarray(s) / s_max, 0.0, None)
        return np.where(t > 0, -amplitude * p * t ** max(p - 1, 0) / s_max, 0.0)

    def d2g(s):
        t = np.clip(1.0 - np.asarray(s) / s_max, 0.0, None)
        if p < 2:
            return 0.0 * t
        # t**0 would be 1 outside the support, so mask explicitly
        return np.where(t > 0, amplitude * p * (p - 1) * t ** (p - 2) / s_max**2, 0.0)

    return TestFunctionRadial(g, dg, d2g, s_max, f"bump(s_max={s_max},p={p})")


def zero_test_function() -> TestFunctionRadial:
    z = lambda s: 0.0 * np.asarray(s, dtype=float)
    return TestFunctionRadial(z, z, z, 1.0, "zero")


# ---------------------------------------------------------------- quadrature


class HalfSphereQuadrature:
    """Quadrature on the upper half-sphere S^{N-1}_+.

    Tensor Gauss rules in angular charts for N = 2, 3; stratified Monte Carlo
    otherwise, with a standard-error estimate.
    """

    def __init__(self, N: int, order: int = 64, samples: int = 200_000, seed: int = 0):
        self.N = N
        self.error_estimate = 0.0
        if N == 2:
            t, w = leggauss(order)
            th = 0.5 * np.pi * (t + 1.0)
            self.points = np.stack([np.cos(th), np.sin(th)], axis=-1)
            self.weights = 0.5 * np.pi * w
            self.stochastic = False
        elif N == 3:
            t, w = leggauss(order)
            pol = 0.25 * np.pi * (t + 1.0)  # angle from e_3
            tp, wp = leggauss(2 * order)
            az = np.pi * (tp + 1.0)
            P, A = np.meshgrid(pol, az, indexing="ij")
            self.points = np.stack(
                [np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)], axis=-1
            ).reshape(-1, 3)
            self.weights = (np.outer(0.25 * np.pi * w * np.sin(pol), np.pi * wp)).ravel()
            self.stochastic = False
        else:
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((samples, N))
            strata = (np.arange(samples) + rng.random(samples)) / samples
            g[:, -1] = np.abs(ndtri(0.5 + 0.5 * strata.clip(1e-15, 1 - 1e-15)))
            g[:, -1] = rng.permutation(g[:, -1])
            pts = g / np.linalg.norm(g, axis=1, keepdims=True)
            area = math.pi ** (N / 2) / math.gamma(N / 2)  # half of |S^{N-1}|
            self.points = pts
            self.weights = np.full(samples, area / samples)
            self.stochastic = True

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.points), dtype=float)
        total = float(np.dot(self.weights, vals))
        if self.stochastic:
            self.error_estimate = float(self.weights.sum() * vals.std() / math.sqrt(vals.size))
        return total


def psi1_square_integral(N: int, quad: HalfSphereQuadrature | None = None) -> float:
    quad = quad or HalfSphereQuadrature(N)
    return quad.integrate(lambda s: s[..., -1] ** 2)


def c_mu(sp: SpectralParams, quad: HalfSphereQuadrature | None = None) -> float:
    """Normalisation of the Dirac identity: 2 sqrt(mu - mu1) int psi_1^2, or int psi_1^2 at mu1."""
    I = psi1_square_integral(sp.dim, quad)
    return I if sp.critical else 2.0 * sp.gap * I


def halfspace_volume_integral(f, N: int, r_lo: float, r_hi: float, panels: int = 8,
                              order: int = 16, quad: HalfSphereQuadrature | None = None,
                              breakpoints=()) -> float:
    """Integral of f(x) over {x_N > 0, r_lo < |x| < r_hi} by a polar tensor rule.

    Radial panels are geometric below r_hi so that integrands with power
    behaviour at the origin are handled uniformly.
    """
    quad = quad or HalfSphereQuadrature(N)
    edges = np.geomspace(r_lo, r_hi, panels + 1)
    edges = np.unique(np.concatenate([edges, [b for b in breakpoints if r_lo < b < r_hi]]))
    t, w = leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (b - a) * (t + 1.0) + a).ravel()
    wr = (0.5 * (b - a) * w).ravel() * r ** (N - 1)
    pts = r[:, None, None] * quad.points[None, :, :]
    vals = f(pts)
    return float(np.einsum("i,ij,j->", wr, vals, quad.weights))


def dirac_identity_terms(zeta: TestFunctionRadial, sp: SpectralParams, eps_schedule=None,
                         quad: HalfSphereQuadrature | None = None, tol: float = 1e-9):
    """Excised integrals I(eps) = int_{x_N>0, |x|>eps} phi_mu L*zeta gamma_mu dx and their limit.

    Returns (eps list, I list, extrapolated limit, target c_mu zeta(0)).
    """
    quad = quad or HalfSphereQuadrature(sp.dim)
    r_hi = math.sqrt(zeta.s_max)
    if sp.critical and r_hi > 1.0:
        raise CriticalRange("critical branch needs the test support inside the unit ball")
    if eps_schedule is None:
        eps_schedule = [r_hi * 2.0**-k for k in range(4, 12)]
    integrand = lambda x: phi_mu(x, sp) * zeta.lstar_halfspace(x, sp) * gamma_mu(x, sp)
    vals = []
    for eps in eps_schedule:
        panels = max(8, int(math.ceil(math.log2(r_hi / eps))) + 4)
        fine = halfspace_volume_integral(integrand, sp.dim, eps, r_hi, panels, 16, quad)
        check = halfspace_volume_integral(integrand, sp.dim, eps, r_hi, 2 * panels, 16, quad)
        if abs(fine - check) > tol * max(1.0, abs(check)):
            raise QuadratureUnconverged("radial quadrature did not settle", eps=eps)
        vals.append(check)
    # the excised ball contributes O(eps^2) (times a log at the critical value)
    ext = [richardson(eps_schedule[: i + 1], vals[: i + 1], rate=2.0) for i in range(1, len(vals))]
    limit = float(ext[-1])
    target = c_mu(sp, quad) * zeta.at_origin()
    return list(eps_schedule), vals, limit, target


def dirac_identity_residual(zeta: TestFunctionRadial, sp: SpectralParams, eps_schedule=None,
                            quad: HalfSphereQuadrature | None = None) -> float:
    """|int phi_mu L*zeta gamma_mu - c_mu zeta(0)| / max(1, |c_mu zeta(0)|)."""
    _, _, limit, target = dirac_identity_terms(zeta, sp, eps_schedule, quad)
    return abs(limit - target) / max(1.0, abs(target))
