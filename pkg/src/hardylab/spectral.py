"""Principal eigenpair, the weight sigma with eta = sigma/gamma, the boundary density beta,
and log-log fits of the power laws near the singular boundary point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .discretize import GridFunction, SparseSystem, solve_dirichlet
from .errors import NegativeMode, NoConvergence, OffsetOutsideMesh, WindowTooNarrow
from .fields import boundary_quadrature, interpolate, interpolation_matrix
from .halfspace import SpectralParams


@dataclass
class EigenPair:
    ell: float
    gamma: GridFunction
    sys: SparseSystem
    params: SpectralParams
    iterations: int
    residual: float
    history: list = field(default_factory=list)

    @property
    def mesh(self):
        return self.gamma.mesh


def principal_eigenpair(sys: SparseSystem, tol: float = 1e-10, maxit: int = 400) -> EigenPair:
    """Inverse power iteration for (A, M) with the lumped mass M.

    Stops when the Rayleigh quotient changes by <= tol relatively and the
    eigen-residual ||A g - ell M g|| / ||ell M g|| is below 10*tol.
    """
    if sys.variant != "exact":
        raise ValueError("the principal eigenpair is defined with the exact potential")
    sys.require_spd()
    mesh = sys.mesh
    I = sys.interior
    M = sys.mass
    x = np.maximum(mesh.rho[I], 0.0) + 1e-3
    ell = np.inf
    hist = []
    for it in range(1, maxit + 1):
        y = sys.solve(M * x)
        new = float(y @ (M * x)) / float(y @ (M * y))
        y /= math.sqrt(float(y @ (M * y)))
        res = np.linalg.norm(sys.A @ y - new * M * y) / np.linalg.norm(new * M * y)
        hist.append(new)
        change = abs(new - ell) / abs(new)
        ell, x = new, y
        if change <= tol and res <= 10 * tol:
            break
    else:
        raise NoConvergence("inverse iteration did not converge", change=change, residual=res)
    if x.sum() < 0:
        x = -x
    if x.min() < -1e-8 * x.max():
        raise NegativeMode("principal vector changes sign; mesh inadequate", min=x.min())
    g = np.zeros(mesh.n_nodes)
    g[I] = x
    return EigenPair(ell, GridFunction(mesh, g), sys, SpectralParams(sys.mu, mesh.dim), it, float(res), hist)


def rayleigh_quotient(sys: SparseSystem, v: np.ndarray) -> float:
    """Rayleigh quotient of an interior vector."""
    return float(v @ (sys.A @ v)) / float(v @ (sys.mass * v))


# ---------------------------------------------------------------- fits


@dataclass
class PowerFit:
    slope: float
    intercept: float
    ci: float  # half-width of the 95% interval of the slope
    r: np.ndarray
    values: np.ndarray
    layers: int

    def fitted(self) -> np.ndarray:
        return np.exp(self.intercept) * self.r**self.slope


def axis_direction(dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[-1] = 1.0
    return e


def ray_samples(u: GridFunction, window, direction=None, n_points: int = 12):
    mesh = u.mesh
    direction = axis_direction(mesh.dim) if direction is None else np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    r = np.geomspace(window[0], window[1], n_points)
    pts = r[:, None] * direction[None, :]
    return r, pts, interpolate(mesh, u.values, pts)


def _count_layers(mesh, window) -> int:
    if mesh.kind == "p1":
        rr = mesh.ring_radii
        return int(np.sum((rr >= window[0]) & (rr <= window[1])))
    ax = mesh.grid_axes[0][-1]
    return int(np.sum((ax >= window[0]) & (ax <= window[1])))


def resolved_window(mesh, decades: float = 1.0, factor: float = 5.0, r_cap: float | None = None):
    """Smallest window [r_min, r_min*10^decades] with r_min >= factor*(local spacing)."""
    R = mesh.domain.R_Omega
    q, h = mesh.q, mesh.h
    # h (r/R)^{1-1/q} = r/factor  =>  r = R (factor h / R)^q
    r_min = R * (factor * h / R) ** q if q > 1 else factor * h
    r_min = max(r_min, factor * mesh.spacing_at_radius(r_min))
    r_max = min(r_min * 10**decades, r_cap or R / 4)
    return (float(r_min), float(r_max))


def log_log_fit(r, v, layers: int = 99) -> PowerFit:
    if np.any(v <= 0):
        raise ValueError("log-log fit needs positive samples")
    lr, lv = np.log(r), np.log(v)
    res = stats.linregress(lr, lv)
    tcrit = stats.t.ppf(0.975, len(r) - 2)
    return PowerFit(float(res.slope), float(res.intercept), float(tcrit * res.stderr), r, v, layers)


def gamma_asymptotics_fit(pair: EigenPair, direction=None, window=None, n_points: int = 12) -> PowerFit:
    """Least-squares slope of log gamma(r sigma) against log r."""
    mesh = pair.mesh
    window = window or resolved_window(mesh)
    layers = _count_layers(mesh, window)
    if layers < 6:
        raise WindowTooNarrow(f"only {layers} mesh layers inside the fit window", layers=layers)
    r, _, v = ray_samples(pair.gamma, window, direction, max(n_points, 8))
    return log_log_fit(r, v, layers)


def scale_window(mesh, factor: float = 10.0):
    """[R (factor h / R)^q, R/10]: every sample has at least ``factor`` local spacings to the origin."""
    R = mesh.domain.R_Omega
    lo = R * (factor * mesh.h / R) ** mesh.q
    return (float(lo), float(R / 10))


def gamma_scale(pair: EigenPair, window=None, n_points: int = 24, degree: int = 2) -> dict:
    """Constant c1 in gamma ~ c1 rho |x|^{alpha_+ - 1} along the axis.

    The ratio is fitted as c1 + d1 r + d2 r^2 over the window (the corrections
    from the boundary curvature are integer powers of r) and c1 is the
    intercept; the raw ratios and the drift coefficients are returned with it.
    """
    mesh = pair.mesh
    window = window or scale_window(mesh)
    r, pts, v = ray_samples(pair.gamma, window, None, n_points)
    rho = mesh.domain.rho(pts)
    ratio = v / (rho * r ** (pair.params.alpha_plus - 1.0))
    A = np.vander(r, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(A, ratio, rcond=None)
    return {"c1": float(coef[0]), "drift": coef[1:].tolist(), "r": r, "ratio": ratio, "window": window}


# ---------------------------------------------------------------- weight and density


@dataclass
class WeightPair:
    sigma: GridFunction
    eta: np.ndarray  # on interior nodes
    c2_hat: float
    min_gap: float  # min(sigma - gamma) over interior nodes


def weight_pair(sys: SparseSystem, pair: EigenPair) -> WeightPair:
    """sigma solves L sigma = gamma / rho*, rho* = min(1/ell, rho), zero boundary data."""
    mesh = sys.mesh
    I = sys.interior
    rho_star = np.minimum(1.0 / pair.ell, mesh.rho)
    rhs = np.zeros(mesh.n_nodes)
    rhs[I] = pair.gamma.values[I] / rho_star[I]
    sigma = solve_dirichlet(sys, rhs)
    eta = sigma.values[I] / pair.gamma.values[I]
    return WeightPair(sigma, eta, float(eta.max()), float(np.min(sigma.values[I] - pair.gamma.values[I])))


@dataclass
class BoundaryDensity:
    nodes: np.ndarray  # boundary node ids (origin excluded)
    points: np.ndarray
    beta: np.ndarray
    weights: np.ndarray  # surface quadrature weights
    envelope: np.ndarray  # |x|^{alpha_+ - 1}
    comparison: tuple  # (c, C) with c*envelope <= beta <= C*envelope on the fit band


def beta_density(pair: EigenPair, mesh=None, offset_factor: float = 1.5) -> BoundaryDensity:
    """beta = -d gamma/dn from one-sided quotients gamma(x - t n)/t at t and 2t, Richardson-combined."""
    mesh = mesh or pair.mesh
    dom = mesh.domain
    B, w = boundary_quadrature(mesh)
    X = mesh.nodes[B]
    n = dom.normal(X)
    t = offset_factor * mesh.spacing[B]
    p1 = X - t[:, None] * n
    p2 = X - 2 * t[:, None] * n
    if np.any(dom.rho(p2) <= 0) or np.any(dom.rho(p2) > dom.c):
        raise OffsetOutsideMesh("normal offset leaves the domain")
    E1 = interpolation_matrix(mesh, p1)
    E2 = interpolation_matrix(mesh, p2)
    if (E1.getnnz(axis=1) == 0).any() or (E2.getnnz(axis=1) == 0).any():
        raise OffsetOutsideMesh("normal offset point not covered by the mesh")
    d1 = (E1 @ pair.gamma.values) / t
    d2 = (E2 @ pair.gamma.values) / (2 * t)
    beta = 2 * d1 - d2
    r = np.linalg.norm(X, axis=1)
    env = r ** (pair.params.alpha_plus - 1.0)
    band = (r >= 2 * mesh.h) & (r <= dom.R_Omega / 4)
    ratio = beta[band] / env[band] if band.any() else beta / env
    return BoundaryDensity(B, X, beta, w, env, (float(ratio.min()), float(ratio.max())))


def beta_slope(bd: BoundaryDensity, window) -> PowerFit:
    r = np.linalg.norm(bd.points, axis=1)
    m = (r >= window[0]) & (r <= window[1])
    return log_log_fit(r[m], bd.beta[m], int(m.sum()))


def gradient_bound_check(pair: EigenPair, min_distance_factor: float = 3.0) -> float:
    """Observed sup of rho |grad gamma| / gamma at quadrature points with rho >= 3h."""
    from .fields import volume_quadrature

    mesh = pair.mesh
    vq = volume_quadrature(mesh)
    rho = mesh.domain.rho(vq.points)
    m = rho >= min_distance_factor * mesh.h
    g = vq.values(pair.gamma.values)[m]
    grad = np.linalg.norm(vq.gradient(pair.gamma.values)[m], axis=1)
    return float(np.max(rho[m] * grad / g))
