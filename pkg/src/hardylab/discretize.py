"""Discrete Hardy operator -Delta + mu V on graded meshes.

P1 stiffness on triangulations (N = 2) and a symmetric finite-volume
Laplacian on tensor grids (N = 3). The potential is lumped at the nodes:
mu * w_i * V(x_i) on the diagonal, with w_i the node's quadrature weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import MuBelowCritical, NoConvergence, NotSPD, SingularNode
from .geometry import GradedMesh
from .halfspace import critical_mu

SOLVE_RTOL = 1e-10


@dataclass
class GridFunction:
    """Nodal values on every mesh node; boundary entries hold the Dirichlet trace."""

    mesh: GradedMesh
    values: np.ndarray

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.mesh.interior]

    @property
    def trace(self) -> np.ndarray:
        return self.values[self.mesh.boundary_nodes]

    def __add__(self, other):
        v = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.mesh, self.values + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.mesh, self.values - v)

    def __mul__(self, s):
        return GridFunction(self.mesh, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.mesh, -self.values)


def stiffness_matrix(mesh: GradedMesh) -> sp.csr_matrix:
    """Full (all-node) Dirichlet-energy matrix: u^T K u = int |grad u|^2."""
    if mesh.kind == "p1":
        P = mesh.nodes[mesh.cells]
        # barycentric gradients: G[t] = inv([[x1-x0],[x2-x0]]) columns
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        area = 0.5 * np.abs(det)
        g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
        g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
        g0 = -g1 - g2
        G = np.stack([g0, g1, g2], axis=1)  # (T, 3, 2)
        Ke = area[:, None, None] * np.einsum("tid,tjd->tij", G, G)
        rows = np.repeat(mesh.cells, 3, axis=1).ravel()
        cols = np.tile(mesh.cells, (1, 3)).ravel()
        K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()
    else:
        a, b = mesh.cells[:, 0], mesh.cells[:, 1]
        # conductance = dual face area / edge length, built axis by axis
        cond = _grid_conductances(mesh)
        data = np.concatenate([cond, cond, -cond, -cond])
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([a, b, b, a])
        K = sp.coo_matrix((data, (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()
    K.sum_duplicates()
    return K


def _grid_conductances(mesh: GradedMesh) -> np.ndarray:
    ax, idx_map, shape = mesh.grid_axes
    dim = len(ax)
    inv_full = np.flatnonzero(idx_map >= 0)
    coords_idx = np.stack(np.unravel_index(inv_full, shape), axis=1)  # kept node -> grid multi-index
    widths = []
    for a in ax:
        mid = 0.5 * (a[1:] + a[:-1])
        lo = np.concatenate([[a[0]], mid])
        hi = np.concatenate([mid, [a[-1]]])
        widths.append(hi - lo)
    ia = coords_idx[mesh.cells[:, 0]]
    ib = coords_idx[mesh.cells[:, 1]]
    axis = np.argmax(ia != ib, axis=1)
    cond = np.empty(len(mesh.cells))
    for d in range(dim):
        m = axis == d
        length = ax[d][ib[m, d]] - ax[d][ia[m, d]]
        face = np.ones(m.sum())
        for e in range(dim):
            if e != d:
                face *= widths[e][ia[m, e]]
        cond[m] = face / length
    return cond


@dataclass
class SparseSystem:
    """(-Delta + mu V) restricted to interior nodes, with boundary coupling kept for data."""

    mesh: GradedMesh
    mu: float
    variant: str
    eps: float | None
    A: sp.csc_matrix
    K: sp.csr_matrix  # full stiffness
    potential: np.ndarray  # V at every node (inf at the origin)
    stats: dict = field(default_factory=dict)
    _lu: object = field(default=None, repr=False)
    _inertia_ok: bool | None = field(default=None, repr=False)

    @property
    def interior(self):
        return self.mesh.interior

    @property
    def boundary(self):
        return self.mesh.boundary_nodes

    @property
    def mass(self) -> np.ndarray:
        return self.mesh.weights[self.mesh.interior]

    @property
    def K_IB(self):
        return self.K[self.interior][:, self.boundary]

    def factor(self):
        """Sparse LDL^T-type factorisation (symmetric ordering, no pivoting).

        The sign pattern of U's diagonal gives the inertia, which is the
        positive-definiteness probe.
        """
        if self._lu is None:
            lu = splu(self.A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options=dict(SymmetricMode=True))
            d = lu.U.diagonal()
            self._inertia_ok = bool(np.all(d > 0))
            self.stats["negative_pivots"] = int(np.sum(d <= 0))
            self._lu = lu
        return self._lu

    def is_positive_definite(self) -> bool:
        self.factor()
        return bool(self._inertia_ok)

    def require_spd(self):
        if not self.is_positive_definite():
            raise NotSPD(
                "discrete operator is not positive definite (refine the mesh or move mu away from mu1)",
                mu=self.mu, negative_pivots=self.stats["negative_pivots"],
            )

    def solve(self, b: np.ndarray) -> np.ndarray:
        self.require_spd()
        lu = self.factor()
        x = lu.solve(b)
        for _ in range(3):
            res = b - self.A @ x
            nb = np.linalg.norm(b)
            rel = np.linalg.norm(res) / nb if nb > 0 else np.linalg.norm(res)
            if rel <= SOLVE_RTOL:
                break
            x = x + lu.solve(res)
        else:
            res = b - self.A @ x
            nb = np.linalg.norm(b)
            rel = np.linalg.norm(res) / nb if nb > 0 else np.linalg.norm(res)
            if rel > SOLVE_RTOL:
                raise NoConvergence("iterative refinement did not reach the residual target", residual=rel)
        self.stats["last_residual"] = float(rel)
        return x

    def apply(self, u: GridFunction) -> np.ndarray:
        """Discrete L_mu u at interior nodes (weak form, i.e. already multiplied by the weights)."""
        I = self.interior
        return (self.K @ u.values)[I] + self.mu * self.mass * self.potential[I] * u.values[I]

    def with_potential_scale(self, mu: float) -> "SparseSystem":
        return assemble(self.mesh, mu, self.variant, self.eps)


def potential_values(mesh: GradedMesh, variant: str = "exact", eps: float | None = None) -> np.ndarray:
    """V(x) = |x|^{-2}, or the truncation min(eps^{-2}, |x|^{-2}) (bounded by eps^{-2} inside B_eps)."""
    r2 = np.sum(mesh.nodes**2, axis=1)
    with np.errstate(divide="ignore"):
        V = 1.0 / r2
    if variant == "truncated":
        V = np.minimum(V, eps**-2)
    return V


def assemble(mesh: GradedMesh, mu: float, variant: str = "exact", eps: float | None = None) -> SparseSystem:
    if variant not in ("exact", "truncated"):
        raise ValueError(f"unknown potential variant {variant!r}")
    if (eps is not None) != (variant == "truncated"):
        raise ValueError("eps must be given exactly when variant='truncated'")
    if mu < critical_mu(mesh.dim) - 1e-12:
        raise MuBelowCritical(f"mu={mu} below {critical_mu(mesh.dim)}", mu=mu)
    I = mesh.interior
    if np.any(mesh.radius[I] == 0):
        raise SingularNode("an interior node sits at the origin")
    K = stiffness_matrix(mesh)
    V = potential_values(mesh, variant, eps)
    A = K[I][:, I] + sp.diags(mu * mesh.weights[I] * V[I])
    A = ((A + A.T) * 0.5).tocsc()
    return SparseSystem(mesh, float(mu), variant, eps, A, K, V)


def solve_dirichlet(sys: SparseSystem, rhs=None, bdry=None) -> GridFunction:
    """Solve L u = rhs in the interior with u = bdry on boundary nodes.

    ``rhs`` is a nodal density (integrated with the lumped weights);
    ``bdry`` is either a full nodal array or one value per boundary node.
    """
    mesh = sys.mesh
    n = mesh.n_nodes
    u = np.zeros(n)
    B, I = sys.boundary, sys.interior
    if bdry is not None:
        bdry = np.asarray(bdry, dtype=float)
        u[B] = bdry[B] if bdry.shape[0] == n else bdry
    b = np.zeros(I.size)
    if rhs is not None:
        rhs = np.asarray(rhs, dtype=float)
        b += sys.mass * (rhs[I] if rhs.shape[0] == n else rhs)
    if bdry is not None and np.any(u[B] != 0):
        b -= sys.K[I][:, B] @ u[B]
    if np.any(b != 0):
        u[I] = sys.solve(b)
    return GridFunction(mesh, u)


def quadratic_form(u: GridFunction, mu: float, K: sp.spmatrix | None = None) -> float:
    """int |grad u|^2 + mu int u^2/|x|^2 with the lumped potential quadrature."""
    mesh = u.mesh
    K = stiffness_matrix(mesh) if K is None else K
    v = u.values
    I = mesh.interior
    r2 = np.sum(mesh.nodes[I] ** 2, axis=1)
    return float(v @ (K @ v) + mu * np.sum(mesh.weights[I] * v[I] ** 2 / r2))


def hardy_remainder_check(u: GridFunction, K: sp.spmatrix | None = None) -> tuple[float, float]:
    """(int |grad u|^2 + mu1 int u^2/|x|^2,  1/4 int u^2 / (|x|^2 ln^2(|x|/R)))."""
    mesh = u.mesh
    lhs = quadratic_form(u, critical_mu(mesh.dim), K)
    I = mesh.interior
    r = mesh.radius[I]
    R = mesh.domain.R_Omega
    rhs = 0.25 * np.sum(mesh.weights[I] * u.values[I] ** 2 / (r**2 * np.log(r / R) ** 2))
    return float(lhs), float(rhs)


def relative_residual(sys: SparseSystem, u: GridFunction, rhs=None) -> float:
    """||L u - M rhs|| / ||M rhs + boundary load|| on interior nodes."""
    I = sys.interior
    r = sys.apply(u)
    load = np.zeros(I.size) if rhs is None else sys.mass * np.asarray(rhs)[I]
    bl = (sys.K @ np.where(u.mesh.boundary, u.values, 0.0))[I]
    scale = np.linalg.norm(load - bl)
    return float(np.linalg.norm(r - load) / scale) if scale > 0 else float(np.linalg.norm(r - load))


def critical_limit_values(solver, mu1: float, deltas=(1e-1, 1e-2, 1e-3)) -> dict:
    """Evaluate ``solver(mu)`` at mu1 + delta; the critical value is treated as this limit."""
    vals = [solver(mu1 + d) for d in deltas]
    return {"deltas": list(deltas), "values": vals}
