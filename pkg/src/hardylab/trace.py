"""Very weak solutions with (interior density, boundary density, atom at 0) data,
their representation identity, Kato-type inequalities, and boundary-trace recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .discretize import GridFunction
from .errors import DataUnresolved, HypothesisViolated, TraceDivergent, WindowTooNarrow
from .extrapolate import richardson
from .fields import interpolate, volume_quadrature
from .geometry import GradedMesh, boundary_layer
from .halfspace import SpectralParams, c_mu
from .kernels import (
    dual_weight, eigenpair_for, exhaustion_schedule, green_solve, lstar_times_weight, poisson_solution,
    singular_kernel_for, system_for,
)
from .spectral import EigenPair, _count_layers, beta_density, ray_samples

RESIDUAL_GATE = 1e-9


@dataclass
class WeakProblemData:
    """nu: nodal interior density; lam: nodal boundary density (full length); k: mass of the atom at 0."""

    nu: np.ndarray | None = None
    lam: np.ndarray | None = None
    k: float = 0.0

    def scaled(self, s: float) -> "WeakProblemData":
        return WeakProblemData(None if self.nu is None else s * self.nu,
                               None if self.lam is None else s * self.lam, s * self.k)


def weak_solution(data: WeakProblemData, mesh: GradedMesh, mu: float) -> GridFunction:
    """u = G[nu] + K[lam] + k phi^Omega by superposition."""
    u = GridFunction(mesh, np.zeros(mesh.n_nodes))
    if data.nu is not None and np.any(data.nu != 0):
        u = u + green_solve(system_for(mesh, mu), data.nu)
    if data.lam is not None and np.any(data.lam != 0):
        u = u + poisson_solution(mesh, mu, data.lam)
    if data.k != 0:
        u = u + data.k * singular_kernel_for(mesh, mu).u
    return u


def _beta_hat(pair: EigenPair):
    key = ("beta_hat", id(pair))
    hit = pair.mesh._cache.get(key)
    if hit is None:
        bd = beta_density(pair)
        _, c1 = dual_weight(pair)
        hit = pair.mesh._cache[key] = (bd, bd.beta / c1)
    return hit


def representation_terms(u: GridFunction, data: WeakProblemData, mu: float, zeta, pair: EigenPair | None = None) -> dict:
    """Both sides of int u (L* zeta) gamma dx = int zeta gamma nu dx + int zeta beta dlam + k c_mu zeta(0).

    gamma and beta are divided by the fitted c1 so that the singular term carries c_mu.
    """
    mesh = u.mesh
    pair = pair or eigenpair_for(mesh, mu)
    ghat, _ = dual_weight(pair)
    vq = volume_quadrature(mesh)
    X = vq.points
    lhs = vq.integrate(vq.values(u.values) * lstar_times_weight(pair, zeta, ghat))
    zg = zeta.value(X) * vq.values(ghat)
    t_nu = vq.integrate(zg * vq.values(data.nu)) if data.nu is not None else 0.0
    if data.lam is not None:
        bd, bhat = _beta_hat(pair)
        t_lam = float(np.sum(bd.weights * zeta.value(bd.points) * bhat * data.lam[bd.nodes]))
    else:
        t_lam = 0.0
    t_k = data.k * c_mu(SpectralParams(mu, mesh.dim)) * zeta.at_origin()
    rhs = t_nu + t_lam + t_k
    scale = abs(t_nu) + abs(t_lam) + abs(t_k)
    return {"zeta": zeta.name, "lhs": lhs, "rhs": rhs, "nu": t_nu, "lam": t_lam, "atom": t_k,
            "residual": abs(lhs - rhs) / scale if scale > 0 else abs(lhs)}


def representation_residual(u: GridFunction, data: WeakProblemData, mu: float, zetas, pair=None) -> dict:
    rows = [representation_terms(u, data, mu, z, pair) for z in zetas]
    return {"per_zeta": rows, "max": max(r["residual"] for r in rows) if rows else 0.0}


# ---------------------------------------------------------------- Kato inequalities


def kato_residual(f: np.ndarray, h: np.ndarray, mesh: GradedMesh, mu: float, zeta) -> dict:
    """Both sides of the Kato inequalities for u = G[f] + K[h].

    (abs)  int |u| L*zeta gamma <= int sgn(u) f zeta gamma + int |h| zeta beta
    (pos)  int u+ L*zeta gamma <= int [u > 0] f zeta gamma + int h+ zeta beta
    Slack is reported relative to int |f| zeta gamma + int |h| zeta beta + int |u| |L*zeta| gamma.
    """
    sp_ = SpectralParams(mu, mesh.dim)
    if mesh.dim == 2 and sp_.critical:
        raise HypothesisViolated("the Kato inequality needs mu > mu1 when N = 2", mu=mu)
    u = green_solve(system_for(mesh, mu), f) + poisson_solution(mesh, mu, h)
    pair = eigenpair_for(mesh, mu)
    ghat, _ = dual_weight(pair)
    bd, bhat = _beta_hat(pair)
    vq = volume_quadrature(mesh)
    X = vq.points
    uq = vq.values(u.values)
    fq = vq.values(f)
    Lg = lstar_times_weight(pair, zeta, ghat)
    zg = zeta.value(X) * vq.values(ghat)
    zb = bd.weights * zeta.value(bd.points) * bhat
    hb = h[bd.nodes]
    # magnitude of every term in the inequality; the quadrature drift of the identity scales with it
    scale = (vq.integrate(np.abs(fq) * zg) + float(np.sum(zb * np.abs(hb)))
             + vq.integrate(np.abs(uq) * np.abs(Lg)))
    abs_l = vq.integrate(np.abs(uq) * Lg)
    abs_r = vq.integrate(np.sign(uq) * fq * zg) + float(np.sum(zb * np.abs(hb)))
    pos_l = vq.integrate(np.maximum(uq, 0.0) * Lg)
    pos_r = vq.integrate((uq > 0) * fq * zg) + float(np.sum(zb * np.maximum(hb, 0.0)))
    s = scale if scale > 0 else 1.0
    return {"zeta": zeta.name, "abs": (abs_l, abs_r), "pos": (pos_l, pos_r), "scale": scale,
            "abs_slack": (abs_l - abs_r) / s, "pos_slack": (pos_l - pos_r) / s}


# ---------------------------------------------------------------- traces


@dataclass
class TraceRecord:
    windows: list  # (phi_lo, phi_hi) boundary-angle windows, 0 is the singular point
    window_mass: list  # extrapolated layer integrals per window
    layer_sequences: list  # per window: [(delta, integral), ...]
    m_u: float
    m_sequence: list  # [(eps, int u dbeta_eps), ...]
    k_hat: float
    k_fit: dict
    gate_residual: float
    k_from_mass: float  # m_u / c_mu, the consistency band for k_hat


def _trusted_radius(mesh: GradedMesh, mu: float) -> float:
    sk = mesh._cache.get(("singular_kernel", float(mu)))
    if sk is not None:
        return sk.region_radius
    try:
        return exhaustion_schedule(mesh)[-2]
    except DataUnresolved:
        return 0.0


def interior_residual(u: GridFunction, mu: float, exclude_radius: float = 0.0) -> float:
    """||L_mu u|| / || |K| |u| || over interior nodes whose stencil avoids B_exclude."""
    mesh = u.mesh
    sys = system_for(mesh, mu)
    I = sys.interior
    res = sys.apply(u)
    absK = abs(sys.K)
    scale = (absK @ np.abs(u.values))[I] + abs(mu) * sys.mass * sys.potential[I] * np.abs(u.values[I])
    if exclude_radius > 0:
        near = (mesh.radius <= exclude_radius * (1 + 1e-9)).astype(float)
        touched = (absK @ near)[I] > 0
        keep = ~touched & (mesh.radius[I] > exclude_radius)
    else:
        keep = np.ones(I.size, bool)
    den = np.linalg.norm(scale[keep])
    return float(np.linalg.norm(res[keep]) / den) if den > 0 else 0.0


def layer_integrals(u: GridFunction, windows, deltas) -> list:
    """int_{Sigma_delta cap cone(W)} u dS for each window and layer."""
    mesh = u.mesh
    dom = mesh.domain
    out = [[] for _ in windows]
    for d in deltas:
        n = max(256, int(8 * math.pi * dom.c / mesh.h))
        lay = boundary_layer(mesh, d, samples=n)
        val = interpolate(mesh, u.values, lay.points)
        phi = np.mod(dom.boundary_angle(lay.foot), 2 * math.pi)
        for i, (a, b) in enumerate(windows):
            m = (phi >= a) & (phi <= b)
            out[i].append((float(d), float(np.sum(lay.point_weights[m] * val[m]))))
    return out


def sphere_mass(u: GridFunction, eps: float, pair: EigenPair, n: int = 64) -> float:
    """int over the arc Omega cap dB_eps of u d beta_eps, with d beta_eps = (alpha+ - alpha-) gamma_hat/|x| dS
    (gamma_hat/(|x| ln(1/|x|)) dS at the critical value). For u = phi_mu this equals c_mu."""
    mesh = u.mesh
    dom = mesh.domain
    if mesh.dim != 2:
        raise NotImplementedError("sphere masses are evaluated for N = 2")
    ghat, _ = dual_weight(pair)
    sp_ = pair.params
    th0 = math.asin(min(1.0, eps / (2 * dom.c)))
    t, w = leggauss(n)
    th = th0 + (math.pi - 2 * th0) * 0.5 * (t + 1)
    w = w * 0.5 * (math.pi - 2 * th0) * eps
    pts = eps * np.stack([np.cos(th), np.sin(th)], axis=1)
    uv = interpolate(mesh, u.values, pts)
    gv = interpolate(mesh, ghat, pts)
    if sp_.critical:
        dens = gv / (eps * math.log(1.0 / eps))
    else:
        dens = (sp_.alpha_plus - sp_.alpha_minus) * gv / eps
    return float(np.sum(w * uv * dens))


def singular_ratio_fit(u: GridFunction, sp_: SpectralParams, window, n_points: int = 12) -> dict:
    """Intercept of u/(rho r^{alpha_- - 1}) (or -r^{N/2} u/(rho ln r) at the critical value)
    fitted as k + d r along the axis."""
    mesh = u.mesh
    if _count_layers(mesh, window) < 6:
        raise WindowTooNarrow("fewer than 6 mesh layers in the ratio window", window=window)
    r, pts, v = ray_samples(u, window, None, n_points)
    rho = mesh.domain.rho(pts)
    if sp_.critical:
        ratio = -(r ** (sp_.dim / 2.0)) * v / (rho * np.log(r))
    else:
        ratio = v / (rho * r ** (sp_.alpha_minus - 1.0))
    A = np.stack([np.ones_like(r), r], axis=1)
    coef, *_ = np.linalg.lstsq(A, ratio, rcond=None)
    return {"k_hat": float(coef[0]), "drift": float(coef[1]), "r": r.tolist(), "ratio": ratio.tolist(),
            "window": list(window)}


def default_ratio_window(mesh: GradedMesh, mu: float) -> tuple:
    r0 = max(_trusted_radius(mesh, mu), 1e-3)
    return (r0, min(4.0 * r0, mesh.domain.R_Omega / 4))


def boundary_trace(u: GridFunction, mu: float, windows=((0.6, 2 * math.pi - 0.6),), deltas=None,
                   eps_schedule=None, ratio_window=None, gate: float = RESIDUAL_GATE) -> TraceRecord:
    mesh = u.mesh
    sp_ = SpectralParams(mu, mesh.dim)
    trusted = _trusted_radius(mesh, mu)
    res = interior_residual(u, mu, trusted)
    if res > gate:
        raise ValueError(f"input is not numerically L_mu-harmonic (relative residual {res:.2e})")
    if deltas is None:
        deltas = [4 * mesh.h, 2 * mesh.h, mesh.h]
    seqs = layer_integrals(u, windows, deltas)
    masses = [float(richardson([d for d, _ in s], [v for _, v in s], rate=1.0)) for s in seqs]
    pair = eigenpair_for(mesh, mu)
    if eps_schedule is None:
        e0 = max(2.0 * trusted, 4 * mesh.h ** 2)
        eps_schedule = [e0 * 2.0**k for k in reversed(range(4))]
    ms = [(float(e), sphere_mass(u, e, pair)) for e in eps_schedule]
    vals = np.array([m for _, m in ms])
    if np.all(np.diff(vals) > 0) and vals[-1] > 0:
        # growth exponent of m against 1/eps on the finest half of the schedule
        grow = math.log(vals[-1] / vals[-2]) / math.log(eps_schedule[-2] / eps_schedule[-1])
        if grow > 0.25:
            raise TraceDivergent("boundary mass near 0 grows without bound", growth=grow)
    m_u = float(richardson([e for e, _ in ms], list(vals), rate=1.0))
    fit = singular_ratio_fit(u, sp_, ratio_window or default_ratio_window(mesh, mu))
    return TraceRecord([tuple(w) for w in windows], masses, seqs, m_u, ms, fit["k_hat"], fit, res,
                       m_u / c_mu(sp_))
