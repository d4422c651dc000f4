"""Domains tangent to the hyperplane {x_N = 0} at the origin, and meshes graded toward it.

Only the tangent ball B_c(c e_N) is implemented. Its distance function,
normals and tangency constant are closed-form, which is what makes it useful
as a verification domain. Other domains satisfying the tangency condition
would plug in by providing the same methods.

Two mesh flavours are produced:

* N = 2: a Delaunay triangulation of polar rings centred at the origin with
  ring spacing h (r/R)^{1-1/q}. The Delaunay property makes the P1 stiffness
  matrix an M-matrix on interior nodes, so discrete comparison principles hold.
* N = 3: a tensor grid graded toward the origin in every coordinate, used by
  the finite-volume discretisation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import LayerUnresolved, MeshTooCoarse, UnsupportedDim


@dataclass(frozen=True)
class TangentBall:
    dim: int
    c: float

    @property
    def center(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[-1] = self.c
        return e

    @property
    def R_Omega(self) -> float:
        return 2.0 * self.c

    @property
    def volume(self) -> float:
        N = self.dim
        return math.pi ** (N / 2) / math.gamma(N / 2 + 1) * self.c**N

    def rho(self, x) -> np.ndarray:
        """Distance to the boundary (negative outside)."""
        x = np.asarray(x, dtype=float)
        return self.c - np.linalg.norm(x - self.center, axis=-1)

    def normal(self, x) -> np.ndarray:
        """Outward unit normal at (the radial projection of) x."""
        d = np.asarray(x, dtype=float) - self.center
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def project(self, x) -> np.ndarray:
        """Nearest boundary point."""
        return self.center + self.c * self.normal(x)

    def boundary_point(self, phi) -> np.ndarray:
        """N = 2 parametrisation by the angle about the centre; phi = 0 is the origin."""
        phi = np.asarray(phi, dtype=float)
        return np.stack([self.c * np.sin(phi), self.c * (1.0 - np.cos(phi))], axis=-1)

    def boundary_angle(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.arctan2(x[..., 0], self.c - x[..., 1])

    def tangency_constant(self) -> float:
        """C in |<x, n_x>| <= C |x|^2; exact for spheres through the origin."""
        return 1.0 / (2.0 * self.c)

    def layer_area(self, delta: float) -> float:
        """|{rho = delta}|, the sphere of radius c - delta."""
        N, r = self.dim, self.c - delta
        return 2 * math.pi ** (N / 2) / math.gamma(N / 2) * r ** (N - 1)


DomainC1 = TangentBall


def make_tangent_ball(N: int, c: float) -> TangentBall:
    if N not in (2, 3):
        raise UnsupportedDim(f"tangent ball only implemented for N in (2, 3), got {N}", N=N)
    if not (0 < c <= 0.5):
        raise ValueError("need 0 < c <= 1/2 so that the domain lies in the unit ball")
    return TangentBall(N, float(c))


# ---------------------------------------------------------------- meshes


@dataclass
class GradedMesh:
    """Immutable-by-convention mesh with explicit per-node quadrature weights."""

    domain: TangentBall
    nodes: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray  # bool per node
    weights: np.ndarray  # lumped volume weights
    h: float
    q: float
    kind: str  # "p1" or "grid"
    spacing: np.ndarray  # local node spacing
    ring_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grid_axes: tuple | None = None
    _tri: Delaunay | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    @property
    def rho(self) -> np.ndarray:
        return self.domain.rho(self.nodes)

    def local_spacing(self, points) -> np.ndarray:
        """Spacing of the nearest node, used to size offsets and windows."""
        _, idx = cKDTree(self.nodes).query(np.atleast_2d(points))
        return self.spacing[idx]

    def spacing_at_radius(self, r) -> np.ndarray:
        """Nominal graded spacing h (r/R)^{1-1/q}."""
        R = self.domain.R_Omega
        return self.h * (np.asarray(r, dtype=float) / R) ** (1.0 - 1.0 / self.q)

    # -- export

    def export(self, directory, stem: str = "mesh") -> dict:
        """Flat CSV + JSON tables for external visualisation."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        rho = self.rho
        with open(d / f"{stem}_nodes.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"x{i}" for i in range(self.dim)] + ["rho", "weight", "boundary"])
            for i, x in enumerate(self.nodes):
                w.writerow([i, *(f"{v:.17g}" for v in x), f"{rho[i]:.17g}", f"{self.weights[i]:.17g}", int(self.boundary[i])])
        with open(d / f"{stem}_cells.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"n{i}" for i in range(self.cells.shape[1])])
            for i, cell in enumerate(self.cells):
                w.writerow([i, *cell.tolist()])
        meta = {
            "kind": self.kind, "dim": self.dim, "h": self.h, "q": self.q, "c": self.domain.c,
            "n_nodes": int(self.n_nodes), "n_cells": int(self.cells.shape[0]),
            "nodes_csv": f"{stem}_nodes.csv", "cells_csv": f"{stem}_cells.csv",
        }
        (d / f"{stem}.json").write_text(json.dumps(meta, indent=2))
        return meta


def graded_radii(R: float, h: float, q: float, pinned=()) -> np.ndarray:
    """Ring radii R (i/n)^q, i = 1..n-1, with the nearest ring moved onto each pinned radius."""
    n = max(2, int(math.ceil(q * R / h)))
    r = R * (np.arange(1, n) / n) ** q
    for p in pinned:
        if 0 < p < R:
            r[np.argmin(np.abs(r - p))] = p
    return np.unique(r)


def _tangent_disk_mesh(dom: TangentBall, h: float, q: float, pinned=()) -> GradedMesh:
    c, R = dom.c, dom.R_Omega
    radii = graded_radii(R, h, q, pinned)
    ext = np.concatenate([[0.0], radii, [R]])
    dr = 0.5 * (ext[2:] - ext[:-2])  # local ring spacing

    pts, spc = [], []
    for i, (r, hr) in enumerate(zip(radii, dr)):
        tb = math.asin(min(r / R, 1.0))
        arc = math.pi - 2.0 * tb
        m = max(2, int(round(arc * r / hr)))
        step = arc / m
        if i % 2 == 0:
            th = tb + step * np.arange(1, m)
        else:
            th = tb + step * (np.arange(m) + 0.5)
        p = r * np.stack([np.cos(th), np.sin(th)], axis=1)
        keep = dom.rho(p) > 0.45 * hr
        pts.append(p[keep])
        spc.append(np.full(keep.sum(), hr))
    interior = np.concatenate(pts)
    ispc = np.concatenate(spc)

    # boundary nodes: origin, ring intersections, and fill-in where rings are sparse in arclength
    phis = [0.0]
    ring_phi = 2.0 * np.arcsin(np.clip(radii / R, 0, 1))
    ring_phi = np.concatenate([[0.0], ring_phi, [math.pi]])
    for a, b, hr in zip(ring_phi[:-1], ring_phi[1:], np.concatenate([dr, [h]])):
        k = max(1, int(math.ceil(c * (b - a) / max(hr, 1e-300))))
        phis.extend(a + (b - a) * np.arange(1, k + 1) / k)
    phis = np.unique(np.round(np.array(phis), 15))
    phis = np.concatenate([phis, -phis[(phis > 0) & (phis < math.pi)]])
    bpts = dom.boundary_point(phis)
    bpts[np.abs(phis) < 1e-300] = 0.0
    bspc = np.interp(np.abs(np.sin(phis / 2)) * R, ext[1:-1], dr, left=dr[0], right=h)

    nodes = np.concatenate([interior, bpts])
    boundary = np.concatenate([np.zeros(len(interior), bool), np.ones(len(bpts), bool)])
    spacing = np.concatenate([ispc, bspc])

    tri = Delaunay(nodes)
    cells = tri.simplices.copy()
    P = nodes[cells]
    area2 = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 2, 0] - P[:, 0, 0]) * (P[:, 1, 1] - P[:, 0, 1])
    if np.any(np.abs(area2) < 1e-30):
        raise MeshTooCoarse("degenerate triangles in the graded triangulation", h=h, q=q)
    flip = area2 < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    area = 0.5 * np.abs(area2)
    weights = np.zeros(len(nodes))
    np.add.at(weights, cells.ravel(), np.repeat(area / 3.0, 3))
    return GradedMesh(dom, nodes, cells, boundary, weights, h, q, "p1", spacing, radii, None, tri)


def _graded_axis(lo: float, hi: float, h: float, q: float, R: float) -> np.ndarray:
    """Nodes on [lo, hi] containing 0, graded toward 0 with spacing h (|t|/R)^{1-1/q}."""
    out = [np.zeros(1)]
    for end in (lo, hi):
        if end == 0:
            continue
        L = abs(end)
        n = max(2, int(math.ceil(q * R / h * (L / R) ** (1.0 / q))))
        t = L * (np.arange(1, n + 1) / n) ** q
        out.append(np.sign(end) * t)
    return np.unique(np.concatenate(out))


def _tangent_ball_grid(dom: TangentBall, h: float, q: float, fraction_samples: int = 3) -> GradedMesh:
    c, R = dom.c, dom.R_Omega
    pad = 1.0001
    ax = [_graded_axis(-c * pad, c * pad, h, q, R) for _ in range(dom.dim - 1)]
    ax.append(_graded_axis(0.0, R * pad, h, q, R))
    dual = []
    for a in ax:
        mid = 0.5 * (a[1:] + a[:-1])
        lo = np.concatenate([[a[0]], mid])
        hi = np.concatenate([mid, [a[-1]]])
        dual.append((lo, hi))
    grids = np.meshgrid(*ax, indexing="ij")
    nodes_full = np.stack([g.ravel() for g in grids], axis=1)
    inside = dom.rho(nodes_full) > 0
    inside &= nodes_full[:, -1] > 0

    # inside-fraction of each dual cell by a small tensor sample
    s = (np.arange(fraction_samples) + 0.5) / fraction_samples
    shape = tuple(len(a) for a in ax)
    frac = np.zeros(shape)
    vol = np.ones(shape)
    for d, (lo, hi) in enumerate(dual):
        sh = [1] * dom.dim
        sh[d] = -1
        vol = vol * (hi - lo).reshape(sh)
    sub = np.meshgrid(*([s] * dom.dim), indexing="ij")
    sub = np.stack([g.ravel() for g in sub], axis=1)
    lo_full = np.stack(np.meshgrid(*[d[0] for d in dual], indexing="ij"), axis=-1)
    hi_full = np.stack(np.meshgrid(*[d[1] for d in dual], indexing="ij"), axis=-1)
    for sp in sub:
        p = lo_full + sp * (hi_full - lo_full)
        frac += (dom.rho(p) > 0)
    frac /= len(sub)
    weights_full = (vol * frac).ravel()

    # boundary nodes: outside nodes adjacent to inside nodes
    ins = inside.reshape(shape)
    near = np.zeros(shape, bool)
    for d in range(dom.dim):
        near |= np.roll(ins, 1, axis=d) & (np.arange(shape[d]) > 0).reshape([-1 if k == d else 1 for k in range(dom.dim)])
        near |= np.roll(ins, -1, axis=d) & (np.arange(shape[d]) < shape[d] - 1).reshape([-1 if k == d else 1 for k in range(dom.dim)])
    bnd = near & ~ins
    keep = (ins | bnd).ravel()
    idx_map = -np.ones(keep.size, dtype=np.int64)
    idx_map[keep] = np.arange(keep.sum())
    nodes = nodes_full[keep]
    boundary = bnd.ravel()[keep]
    weights = weights_full[keep]
    # local spacing: geometric mean of dual widths
    widths = [hi - lo for lo, hi in dual]
    spc = np.ones(shape)
    for d, wd in enumerate(widths):
        spc = spc * wd.reshape([-1 if k == d else 1 for k in range(dom.dim)])
    spacing = (spc ** (1.0 / dom.dim)).ravel()[keep]
    # cells stored as nearest-neighbour edges (finite-volume connectivity)
    edges = []
    full_index = np.arange(keep.size).reshape(shape)
    ins_flat = ins.ravel()
    for d in range(dom.dim):
        a = np.take(full_index, np.arange(shape[d] - 1), axis=d).ravel()
        b = np.take(full_index, np.arange(1, shape[d]), axis=d).ravel()
        ok = keep[a] & keep[b] & (ins_flat[a] | ins_flat[b])
        edges.append(np.stack([idx_map[a[ok]], idx_map[b[ok]]], axis=1))
    cells = np.concatenate(edges)
    mesh = GradedMesh(dom, nodes, cells, boundary, weights, h, q, "grid", spacing, np.zeros(0), (ax, idx_map, shape), None)
    return mesh


def build_graded_mesh(dom: TangentBall, h: float, q: float = 2.0, pinned_radii=()) -> GradedMesh:
    """Graded mesh of the tangent ball; ``pinned_radii`` places node rings exactly on given |x| (N = 2)."""
    if q < 1:
        raise ValueError("grading exponent must be >= 1")
    if h <= 0 or h > dom.c:
        raise MeshTooCoarse("nominal spacing must lie in (0, c]", h=h)
    if dom.dim == 2:
        return _tangent_disk_mesh(dom, h, q, pinned_radii)
    if dom.dim == 3:
        return _tangent_ball_grid(dom, h, q)
    raise UnsupportedDim("meshes exist for N = 2, 3 only", N=dom.dim)


# ---------------------------------------------------------------- level sets


@dataclass
class Layer:
    """Discrete level set {rho = delta}.

    ``nodes``/``node_weights`` are the mesh nodes within half a local spacing of
    the level set with co-area surface weights; ``points``/``point_weights`` is
    an exact parametrisation of the level set for interpolated integrals.
    """

    delta: float
    nodes: np.ndarray
    node_weights: np.ndarray
    points: np.ndarray
    point_weights: np.ndarray
    foot: np.ndarray  # nearest boundary point of each sample point

    @property
    def surface(self) -> float:
        return float(self.node_weights.sum())


def boundary_layer(mesh: GradedMesh, delta: float, samples: int | None = None) -> Layer:
    dom = mesh.domain
    rho = mesh.rho
    if delta > rho.max() + 0.5 * mesh.spacing[np.argmax(rho)] or delta <= 0:
        raise LayerUnresolved(f"no level set at delta={delta}", delta=delta)
    half = 0.5 * mesh.spacing
    sel = np.flatnonzero((np.abs(rho - delta) <= half) & ~mesh.boundary)
    if sel.size == 0 and delta >= dom.c - 1e-12:
        sel = np.array([int(np.argmax(rho))])
    if sel.size == 0:
        raise LayerUnresolved("layer not resolved by the mesh", delta=delta)
    # co-area: volume weight / band thickness (|grad rho| = 1)
    nw = mesh.weights[sel] / (2.0 * half[sel])
    r = dom.c - delta
    if r <= 1e-12:
        return Layer(delta, sel, np.zeros(sel.size), dom.center[None, :], np.zeros(1), dom.center[None, :])
    if dom.dim == 2:
        m = samples or max(64, int(2 * math.pi * r / mesh.spacing.min()))
        m = min(m, 200_000)
        phi = 2 * math.pi * (np.arange(m) + 0.5) / m - math.pi
        unit = np.stack([np.sin(phi), -np.cos(phi)], axis=1)
        pts = dom.center + r * unit
        pw = np.full(m, 2 * math.pi * r / m)
    else:
        from numpy.polynomial.legendre import leggauss

        m = samples or 64
        t, w = leggauss(m)
        th = 0.5 * math.pi * (t + 1)
        az = 2 * math.pi * (np.arange(2 * m) + 0.5) / (2 * m)
        T, A = np.meshgrid(th, az, indexing="ij")
        unit = np.stack([np.sin(T) * np.cos(A), np.sin(T) * np.sin(A), -np.cos(T)], axis=-1).reshape(-1, 3)
        pw = (np.outer(0.5 * math.pi * w * np.sin(th), np.full(2 * m, 2 * math.pi / (2 * m)))).ravel() * r**2
        pts = dom.center + r * unit
    foot = dom.center + dom.c * unit
    return Layer(delta, sel, nw, pts, pw, foot)
