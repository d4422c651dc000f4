import math

import numpy as np
import pytest

from hardylab.fields import boundary_quadrature, interpolate, interpolation_matrix, volume_quadrature


def test_interpolation_exact_for_linear(mesh):
    f = 1.0 + 2.0 * mesh.nodes[:, 0] - mesh.nodes[:, 1]
    rng = np.random.default_rng(0)
    pts = mesh.domain.center + 0.45 * rng.uniform(-0.7, 0.7, size=(40, 2))
    np.testing.assert_allclose(interpolate(mesh, f, pts), 1 + 2 * pts[:, 0] - pts[:, 1], atol=1e-12)


def test_interpolation_rows_sum_to_one(mesh):
    pts = np.array([[0.0, 0.3], [0.1, 0.5], [0.0, 0.999]])
    E = interpolation_matrix(mesh, pts)
    np.testing.assert_allclose(np.asarray(E.sum(axis=1)).ravel(), 1.0)


def test_interpolation_outside_is_empty(mesh):
    assert interpolation_matrix(mesh, np.array([[2.0, 2.0]])).getnnz() == 0


def test_volume_quadrature(mesh, disk):
    vq = volume_quadrature(mesh)
    assert vq.integrate(np.ones(len(vq.points))) == pytest.approx(disk.volume, rel=2e-3)
    x = mesh.nodes[:, 0]
    assert vq.integrate(vq.values(x * x)) == pytest.approx(math.pi * 0.5**4 / 4, rel=5e-3)
    np.testing.assert_allclose(vq.gradient(x), np.tile([1.0, 0.0], (len(vq.points), 1)), atol=1e-10)


def test_boundary_quadrature_length(mesh):
    nodes, w = boundary_quadrature(mesh, include_origin=True)
    assert w.sum() == pytest.approx(2 * math.pi * 0.5, rel=1e-4)
    n0, w0 = boundary_quadrature(mesh)
    assert n0.size == nodes.size - 1
