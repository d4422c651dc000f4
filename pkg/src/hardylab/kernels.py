"""Green and Poisson solves, the vanishing of the Poisson kernel at the singular point,
and the singular kernel built by exhaustion of small balls around the origin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from .discretize import GridFunction, SparseSystem, assemble, solve_dirichlet
from .errors import DataUnresolved, MassBoundFailed, NoDecay, NonmonotoneSequence, NotSPD, QuadratureUnconverged
from .extrapolate import richardson
from .fields import boundary_quadrature, interpolate, volume_quadrature
from .geometry import GradedMesh
from .halfspace import SpectralParams, TestFunctionRadial, c_mu, phi_mu, psi1_square_integral
from .spectral import EigenPair, gamma_scale, principal_eigenpair

MONOTONE_TOL = 1e-8


def system_for(mesh: GradedMesh, mu: float, variant: str = "exact", eps: float | None = None) -> SparseSystem:
    """Assembled (and lazily factorised) system, cached on the mesh."""
    key = ("system", float(mu), variant, None if eps is None else float(eps))
    s = mesh._cache.get(key)
    if s is None:
        s = mesh._cache[key] = assemble(mesh, mu, variant, eps)
    return s


def eigenpair_for(mesh: GradedMesh, mu: float) -> EigenPair:
    key = ("eigenpair", float(mu))
    p = mesh._cache.get(key)
    if p is None:
        p = mesh._cache[key] = principal_eigenpair(system_for(mesh, mu))
    return p


# ---------------------------------------------------------------- boundary data


@dataclass
class BoundaryDatum:
    """Nodal density on boundary nodes (full-length array, zero off the boundary) plus an atom at 0."""

    density: np.ndarray
    atom_k: float = 0.0
    width: float | None = None

    def scaled(self, s: float) -> "BoundaryDatum":
        return BoundaryDatum(self.density * s, self.atom_k * s, self.width)


def boundary_bump(mesh: GradedMesh, phi0: float, width: float, mass: float = 1.0,
                  check_resolution: bool = True) -> np.ndarray:
    """Density (1 - (s/w)^2)^3_+ in arclength s from the boundary point at angle phi0,
    normalised to the given mass with the discrete boundary rule (origin included)."""
    dom = mesh.domain
    B = mesh.boundary_nodes
    phi = dom.boundary_angle(mesh.nodes[B])
    dphi = np.angle(np.exp(1j * (phi - phi0)))
    s = dom.c * np.abs(dphi)
    b = np.clip(1.0 - (s / width) ** 2, 0.0, None) ** 3
    if check_resolution:
        inside = s < width
        if inside.sum() < 5:
            raise DataUnresolved("bump narrower than the boundary spacing", width=width)
    nodes, w = boundary_quadrature(mesh, include_origin=True)
    full = np.zeros(mesh.n_nodes)
    full[B] = b
    total = float(np.dot(w, full[nodes]))
    return full * (mass / total)


def boundary_integral(mesh: GradedMesh, f_nodal: np.ndarray, include_origin: bool = False) -> float:
    nodes, w = boundary_quadrature(mesh, include_origin=include_origin)
    return float(np.dot(w, f_nodal[nodes]))


# ---------------------------------------------------------------- Green and Poisson


def green_solve(sys: SparseSystem, nu) -> GridFunction:
    """Zero-boundary solution of L_mu u = nu (nodal density)."""
    if sys.variant != "exact":
        raise ValueError("Green solves use the exact potential")
    return solve_dirichlet(sys, np.asarray(nu, dtype=float))


def harmonic_extension(mesh: GradedMesh, density: np.ndarray) -> GridFunction:
    return solve_dirichlet(system_for(mesh, 0.0), None, density)


def truncated_poisson(mesh: GradedMesh, mu: float, eps: float | None, datum: BoundaryDatum) -> GridFunction:
    """-Delta u + mu V_eps u = 0, u = density on the boundary, via u = K0[density] + w.

    ``eps=None`` means the exact potential. The correction w solves
    (-Delta + mu V_eps) w = -mu V_eps K0[density] with zero boundary values.
    """
    h = harmonic_extension(mesh, datum.density)
    if mu == 0.0:
        return h
    sys = system_for(mesh, mu, "exact") if eps is None else system_for(mesh, mu, "truncated", eps)
    I = sys.interior
    rhs = np.zeros(mesh.n_nodes)
    rhs[I] = -mu * sys.potential[I] * h.values[I]
    w = solve_dirichlet(sys, rhs)
    return h + w


@dataclass
class PoissonLimit:
    u: GridFunction
    eps: list
    sequence: list  # GridFunctions, eps decreasing; eps = 0 means exact potential
    extrapolated: GridFunction
    max_violation: float


def default_eps_schedule(mesh: GradedMesh, start: float = 0.4, terms: int = 5):
    return [start * 2.0**-k for k in range(terms)]


def poisson_limit(mesh: GradedMesh, mu: float, datum: BoundaryDatum, eps_schedule=None,
                  exact_tail: bool = True) -> PoissonLimit:
    """Monotone eps -> 0 limit of truncated Poisson solves.

    With ``exact_tail`` the schedule is closed by the exact-potential solve,
    which coincides with every eps below the smallest node radius; the
    two-term Richardson value then equals that member.
    """
    eps_schedule = list(eps_schedule or default_eps_schedule(mesh))
    if len(eps_schedule) < 4 or any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing with at least 4 terms")
    seq = [truncated_poisson(mesh, mu, e, datum) for e in eps_schedule]
    params = list(eps_schedule)
    if exact_tail:
        seq.append(truncated_poisson(mesh, mu, None, datum))
        params.append(0.0)
    # mu > 0: potential grows as eps decreases, solutions decrease; mu < 0: the reverse
    sign = -1.0 if mu > 0 else 1.0
    worst = 0.0
    for a, b in zip(seq, seq[1:]):
        worst = max(worst, float(np.max(sign * (a.values - b.values))))
    if mu != 0 and worst > MONOTONE_TOL:
        raise NonmonotoneSequence("truncated Poisson family is not monotone in eps", violation=worst)
    ext = GridFunction(mesh, richardson(params, [s.values for s in seq], rate=1.0))
    return PoissonLimit(seq[-1], params, seq, ext, worst)


def poisson_solution(mesh: GradedMesh, mu: float, density: np.ndarray) -> GridFunction:
    """K[density] with the exact potential (the terminal member of the eps limit)."""
    return truncated_poisson(mesh, mu, None, BoundaryDatum(density))


# ---------------------------------------------------------------- duality helpers


def dual_weight(pair: EigenPair, window=None) -> tuple[np.ndarray, float]:
    """gamma / c1, the eigenfunction rescaled to match gamma_mu at the singular point."""
    key = ("dual_weight", None if window is None else tuple(window))
    hit = pair.mesh._cache.get((key, id(pair)))
    if hit is None:
        c1 = gamma_scale(pair, window)["c1"]
        hit = pair.mesh._cache[(key, id(pair))] = (pair.gamma.values / c1, c1)
    return hit


def lstar_times_weight(pair: EigenPair, zeta: TestFunctionRadial, weight: np.ndarray | None = None):
    """(L* zeta) * gamma at the volume quadrature points.

    L* zeta = -Delta zeta - (2/gamma) <grad gamma, grad zeta> + ell zeta is
    multiplied through by gamma, so the 1/rho drift never appears:
    (L* zeta) gamma = -gamma Delta zeta - 2 <grad gamma, grad zeta> + ell gamma zeta.
    """
    mesh = pair.mesh
    vq = volume_quadrature(mesh)
    g = pair.gamma.values if weight is None else weight
    gv = vq.values(g)
    gg = vq.gradient(g)
    X = vq.points
    return -gv * zeta.laplacian(X) - 2.0 * np.einsum("kd,kd->k", gg, zeta.gradient(X)) + pair.ell * gv * zeta.value(X)


def poisson_dual_identity(u: GridFunction, density: np.ndarray, pair: EigenPair, zetas) -> list[dict]:
    """Both sides of int (L* zeta - mu zeta/|x|^2) u gamma dx = int zeta beta dlambda."""
    from .spectral import beta_density

    mesh = u.mesh
    vq = volume_quadrature(mesh)
    gv = vq.values(pair.gamma.values)
    uv = vq.values(u.values)
    r2 = np.sum(vq.points**2, axis=1)
    bd = beta_density(pair)
    out = []
    for z in zetas:
        lhs = vq.integrate(uv * (lstar_times_weight(pair, z) - pair.sys.mu * gv * z.value(vq.points) / r2))
        rhs = float(np.sum(bd.weights * z.value(bd.points) * bd.beta * density[bd.nodes]))
        out.append({"zeta": z.name, "lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / max(abs(rhs), 1e-300)})
    return out


# ---------------------------------------------------------------- vanishing at the origin


@dataclass
class DecayRecord:
    mu: float
    widths: list
    values: list  # solution value at each probe (rows: widths)
    probes: np.ndarray
    rate: float  # empirical exponent of value ~ w^rate at the first probe
    strictly_decreasing: bool
    extrapolated: np.ndarray


def kernel_vanishing_at_origin(mesh: GradedMesh, mu: float, widths=(0.2, 0.1, 0.05, 0.025), probes=None) -> DecayRecord:
    """Solutions with unit-mass mollified data at 0, evaluated at interior probes, as w decreases."""
    if mu < 0:
        raise ValueError("the vanishing property concerns mu > 0 (mu = 0 serves as the control)")
    probes = np.atleast_2d(mesh.domain.center if probes is None else probes)
    vals = []
    for w in widths:
        dens = boundary_bump(mesh, 0.0, w, 1.0)
        u = poisson_solution(mesh, mu, dens)
        vals.append(interpolate(mesh, u.values, probes))
    V = np.array(vals)
    dec = bool(np.all(np.diff(V[:, 0]) < 0))
    rate = float(np.polyfit(np.log(widths), np.log(np.maximum(V[:, 0], 1e-300)), 1)[0])
    if mu > 0 and not dec:
        raise NoDecay("probe values do not decrease with the mollifier width", mu=mu)
    ext = richardson(list(widths), list(V), rate=1.0)
    return DecayRecord(mu, list(widths), V.tolist(), probes, rate, dec, np.asarray(ext))


def reduced_measure_gap(mesh: GradedMesh, mu: float, density: np.ndarray, atom_k: float,
                        widths=(0.2, 0.1, 0.05, 0.025), probes=None) -> dict:
    """K[density + k*bump_w] - K[density] at probes as w decreases."""
    probes = np.atleast_2d(mesh.domain.center if probes is None else probes)
    base = interpolate(mesh, poisson_solution(mesh, mu, density).values, probes)
    gaps = []
    for w in widths:
        full = density + atom_k * boundary_bump(mesh, 0.0, w, 1.0)
        gaps.append(interpolate(mesh, poisson_solution(mesh, mu, full).values, probes) - base)
    G = np.array(gaps)
    return {"mu": mu, "widths": list(widths), "gap": G.tolist(),
            "extrapolated": np.asarray(richardson(list(widths), list(G), rate=1.0)).tolist()}


# ---------------------------------------------------------------- singular kernel


@dataclass
class SingularKernel:
    u: GridFunction  # extrapolated limit, the candidate for phi^Omega
    eps: list
    sequence: list
    max_violation: float
    mass: float  # ell * int u gamma_hat dx
    mass_target: float  # lower bound of the mass (c_mu off the critical value)
    c1: float
    params: SpectralParams
    region_radius: float  # the limit is trusted for |x| > this

    @property
    def mass_ratio(self) -> float:
        return self.mass / self.mass_target


def exhaustion_member(mesh: GradedMesh, mu: float, eps: float) -> GridFunction:
    """Solve on Omega minus the closed ball B_eps, with phi_mu on nodes inside the ball and 0 on the boundary."""
    sys = system_for(mesh, mu)
    sp_ = SpectralParams(mu, mesh.dim)
    I = sys.interior
    r = mesh.radius[I]
    inner = r <= eps * (1 + 1e-12)
    free = ~inner
    A = sys.A
    Aff = A[free][:, free].tocsc()
    lu = splu(Aff, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
    if np.any(lu.U.diagonal() <= 0):
        raise NotSPD("exhaustion subproblem not positive definite", eps=eps)
    vals = np.zeros(mesh.n_nodes)
    data = phi_mu(mesh.nodes[I][inner], sp_)
    b = -(A[free][:, inner] @ data)
    x = lu.solve(b)
    x = x + lu.solve(b - Aff @ x)
    Iv = np.empty(I.size)
    Iv[inner] = data
    Iv[free] = x
    vals[I] = Iv
    return GridFunction(mesh, vals)


def snap_to_rings(mesh: GradedMesh, targets) -> list:
    """Replace each target radius by the nearest mesh ring (exact radii for the exhaustion balls)."""
    if mesh.kind != "p1":
        return [float(t) for t in targets]
    rr = mesh.ring_radii
    return [float(rr[np.argmin(np.abs(rr - t))]) for t in targets]


def exhaustion_schedule(mesh: GradedMesh, multiples=(8, 4, 2, 1)) -> list:
    """Dyadic eps schedule (8h, 4h, 2h, h) snapped to mesh rings.

    Shrinking the balls with h balances the eps-truncation error (linear in
    eps) against the discretisation error of the steep data on the ring.
    """
    top = multiples[0] * mesh.h
    if top > mesh.domain.R_Omega / 4:
        raise DataUnresolved("mesh too coarse for an exhaustion schedule", h=mesh.h)
    return snap_to_rings(mesh, [m * mesh.h for m in multiples])


def singular_kernel(mesh: GradedMesh, mu: float, eps_schedule=None, pair: EigenPair | None = None,
                    mass_tol: float = 0.05, check: bool = True) -> SingularKernel:
    sp_ = SpectralParams(mu, mesh.dim)
    if eps_schedule is None:
        eps_schedule = exhaustion_schedule(mesh)
    eps_schedule = list(eps_schedule)
    # smallest eps must sit 5 local spacings away from the origin
    if eps_schedule[-1] < 5 * float(mesh.spacing_at_radius(eps_schedule[-1])) * (1 - 1e-9):
        raise DataUnresolved("smallest eps not resolved by the graded mesh", eps=eps_schedule[-1])
    seq = [exhaustion_member(mesh, mu, e) for e in eps_schedule]
    worst = 0.0
    r = mesh.radius
    for e, a, b in zip(eps_schedule, seq, seq[1:]):
        m = (r >= e * (1 - 1e-12)) & ~mesh.boundary
        worst = max(worst, float(np.max(b.values[m] - a.values[m])))
    if check and worst > MONOTONE_TOL:
        raise NonmonotoneSequence("exhaustion sequence increases as eps decreases", violation=worst)
    # extrapolate only where the last two members are both solutions (|x| > second-to-last eps);
    # inside that ring the finest member is kept
    ext = richardson(eps_schedule, [s.values for s in seq], rate=1.0)
    both = r > eps_schedule[-2] * (1 + 1e-12)
    limit = GridFunction(mesh, np.where(both, ext, seq[-1].values))
    if check and np.any(limit.values[mesh.interior] < 0):
        raise NonmonotoneSequence("extrapolated singular kernel is negative somewhere")
    pair = pair or eigenpair_for(mesh, mu)
    ghat, c1 = dual_weight(pair)
    vq = volume_quadrature(mesh)
    mass = pair.ell * vq.integrate(vq.values(limit.values) * vq.values(ghat))
    # lower bound: c_mu above the critical value, (N/2 - 1) int psi_1^2 at it
    target = c_mu(sp_) if not sp_.critical else (mesh.dim / 2 - 1) * psi1_square_integral(mesh.dim)
    if check and mass < (1 - mass_tol) * target:
        raise MassBoundFailed("ell * int u0 gamma below the lower bound", mass=mass, bound=target)
    return SingularKernel(limit, eps_schedule, seq, worst, mass, target, c1, sp_, eps_schedule[-2])


def singular_kernel_for(mesh: GradedMesh, mu: float) -> SingularKernel:
    key = ("singular_kernel", float(mu))
    sk = mesh._cache.get(key)
    if sk is None:
        sk = mesh._cache[key] = singular_kernel(mesh, mu)
    return sk


def singular_dirac_identity(phi: GridFunction, pair: EigenPair, zetas) -> list[dict]:
    """int phi (L* zeta) gamma_hat dx against c_mu zeta(0) with gamma_hat = gamma/c1."""
    ghat, c1 = dual_weight(pair)
    vq = volume_quadrature(pair.mesh)
    pv = vq.values(phi.values)
    cm = c_mu(pair.params)
    out = []
    for z in zetas:
        lhs = vq.integrate(pv * lstar_times_weight(pair, z, ghat))
        target = cm * z.at_origin()
        if not np.isfinite(lhs):
            raise QuadratureUnconverged("non-finite quadrature of the singular identity")
        res = abs(lhs - target) / abs(target) if target != 0 else abs(lhs)
        out.append({"zeta": z.name, "lhs": lhs, "rhs": target, "residual": res})
    return out


def ratio_profile(u: GridFunction, sp_: SpectralParams, window, n_points: int = 12):
    """u(r e_N) / (rho r^{alpha_- - 1}) along the axis."""
    from .spectral import ray_samples

    r, pts, v = ray_samples(u, window, None, n_points)
    rho = u.mesh.domain.rho(pts)
    if sp_.critical:
        return r, -(r ** (sp_.dim / 2.0)) * v / (rho * np.log(r))
    return r, v / (rho * r ** (sp_.alpha_minus - 1.0))
