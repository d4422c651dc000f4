"""Evaluation of nodal fields: point interpolation and volume quadrature with gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import GradedMesh

# degree-4 symmetric rule on the reference triangle (barycentric, weight)
_TRI6 = [
    ((0.445948490915965, 0.445948490915965, 0.108103018168070), 0.223381589678011),
    ((0.091576213509771, 0.091576213509771, 0.816847572980459), 0.109951743655322),
]


def _tri_rule():
    bary, w = [], []
    for (a, b, c), wt in _TRI6:
        for perm in ((a, b, c), (b, c, a), (c, a, b)):
            bary.append(perm)
            w.append(wt)
    return np.array(bary), np.array(w)


def interpolation_matrix(mesh: GradedMesh, points, fill: float = 0.0) -> sp.csr_matrix:
    """Sparse matrix E with (E @ values)[k] = u_h(points[k]); points outside the mesh get ``fill``=0 rows."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if mesh.kind == "p1":
        tri = mesh._tri
        s = tri.find_simplex(pts)
        ok = s >= 0
        T = tri.transform[s[ok]]
        b = np.einsum("kij,kj->ki", T[:, :2, :], pts[ok] - T[:, 2, :])
        bary = np.concatenate([b, 1.0 - b.sum(axis=1, keepdims=True)], axis=1)
        cols = tri.simplices[s[ok]]
        rows = np.repeat(np.flatnonzero(ok), 3)
        return sp.csr_matrix((bary.ravel(), (rows, cols.ravel())), shape=(n, mesh.n_nodes))
    # tensor grid: multilinear interpolation on the full grid, absent nodes treated as 0
    ax, idx_map, shape = mesh.grid_axes
    dim = len(ax)
    lo_idx, frac = [], []
    ok = np.ones(n, bool)
    for d in range(dim):
        a = ax[d]
        i = np.clip(np.searchsorted(a, pts[:, d]) - 1, 0, len(a) - 2)
        t = (pts[:, d] - a[i]) / (a[i + 1] - a[i])
        ok &= (t >= -1e-12) & (t <= 1 + 1e-12)
        lo_idx.append(i)
        frac.append(np.clip(t, 0, 1))
    rows, cols, vals = [], [], []
    for corner in range(2**dim):
        bits = [(corner >> d) & 1 for d in range(dim)]
        w = np.ones(n)
        ids = []
        for d in range(dim):
            w = w * (frac[d] if bits[d] else 1 - frac[d])
            ids.append(lo_idx[d] + bits[d])
        flat = np.ravel_multi_index(ids, shape)
        node = idx_map[flat]
        m = ok & (node >= 0) & (w != 0)
        rows.append(np.flatnonzero(m))
        cols.append(node[m])
        vals.append(w[m])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, mesh.n_nodes)
    )


def interpolate(mesh: GradedMesh, values, points) -> np.ndarray:
    return interpolation_matrix(mesh, points) @ np.asarray(values, dtype=float)


@dataclass
class VolumeQuadrature:
    """Quadrature points/weights with sparse maps from nodal data to values and gradients."""

    points: np.ndarray
    weights: np.ndarray
    E: sp.csr_matrix
    G: tuple  # one sparse matrix per coordinate

    def values(self, u) -> np.ndarray:
        return self.E @ u

    def gradient(self, u) -> np.ndarray:
        return np.stack([g @ u for g in self.G], axis=-1)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))


def volume_quadrature(mesh: GradedMesh) -> VolumeQuadrature:
    vq = mesh._cache.get("volume_quadrature")
    if vq is None:
        vq = mesh._cache["volume_quadrature"] = _build_volume_quadrature(mesh)
    return vq


def _build_volume_quadrature(mesh: GradedMesh) -> VolumeQuadrature:
    if mesh.kind == "p1":
        bary, w = _tri_rule()
        cells = mesh.cells
        P = mesh.nodes[cells]
        T, Q = len(cells), len(w)
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        area = 0.5 * np.abs(det)
        g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
        g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
        grads = np.stack([-g1 - g2, g1, g2], axis=1)  # (T, 3, 2)
        pts = np.einsum("qa,tad->tqd", bary, P).reshape(-1, 2)
        wts = (area[:, None] * w[None, :]).ravel()
        rows = np.repeat(np.arange(T * Q), 3)
        cols = np.repeat(cells, Q, axis=0).ravel()
        E = sp.csr_matrix((np.tile(bary, (T, 1)).ravel(), (rows, cols)), shape=(T * Q, mesh.n_nodes))
        G = tuple(
            sp.csr_matrix((np.repeat(grads[:, :, d], Q, axis=0).ravel(), (rows, cols)), shape=(T * Q, mesh.n_nodes))
            for d in range(2)
        )
        return VolumeQuadrature(pts, wts, E, G)
    # grid: nodal quadrature, centred/one-sided differences along grid lines
    ax, idx_map, shape = mesh.grid_axes
    n = mesh.n_nodes
    keep = np.flatnonzero(mesh.weights > 0)
    E = sp.csr_matrix((np.ones(keep.size), (np.arange(keep.size), keep)), shape=(keep.size, n))
    full = np.flatnonzero(idx_map >= 0)
    multi = np.stack(np.unravel_index(full, shape), axis=1)
    G = []
    for d in range(len(ax)):
        i = multi[keep, d]
        plus = multi[keep].copy()
        minus = multi[keep].copy()
        plus[:, d] = np.minimum(i + 1, shape[d] - 1)
        minus[:, d] = np.maximum(i - 1, 0)
        ip = idx_map[np.ravel_multi_index(plus.T, shape)]
        im = idx_map[np.ravel_multi_index(minus.T, shape)]
        ip = np.where(ip >= 0, ip, keep)
        im = np.where(im >= 0, im, keep)
        xp = mesh.nodes[ip, d]
        xm = mesh.nodes[im, d]
        dx = np.where(xp - xm > 0, xp - xm, 1.0)
        r = np.arange(keep.size)
        G.append(sp.csr_matrix(
            (np.concatenate([1 / dx, -1 / dx]), (np.concatenate([r, r]), np.concatenate([ip, im]))),
            shape=(keep.size, n),
        ))
    return VolumeQuadrature(mesh.nodes[keep], mesh.weights[keep], E, tuple(G))


def boundary_quadrature(mesh: GradedMesh, include_origin: bool = False):
    """Nodes of the boundary (origin excluded unless asked) with arclength/area weights.

    For triangulations: half the adjacent boundary-edge lengths (trapezoid rule).
    For grids: co-area weights of the boundary band.
    """
    B = mesh.boundary_nodes
    if mesh.kind == "p1":
        dom = mesh.domain
        phi = dom.boundary_angle(mesh.nodes[B])
        order = np.argsort(phi)
        Bs = B[order]
        P = mesh.nodes[Bs]
        seg = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        w = 0.5 * (seg + np.roll(seg, 1))
        keep = np.linalg.norm(P, axis=1) > 0
        if include_origin:
            keep[:] = True
        return Bs[keep], w[keep]
    w = mesh.weights[B] / np.maximum(mesh.spacing[B], 1e-300)
    keep = (mesh.radius[B] > 0) | include_origin
    return B[keep], w[keep]
