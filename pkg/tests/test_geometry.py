import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import LayerUnresolved, MeshTooCoarse, UnsupportedDim
from hardylab.geometry import boundary_layer, build_graded_mesh, graded_radii, make_tangent_ball


def test_tangent_ball_basics(disk):
    assert disk.R_Omega == 1.0
    assert disk.volume == pytest.approx(math.pi * 0.25)
    assert disk.rho(np.array([0.0, 0.5])) == pytest.approx(0.5)
    assert disk.rho(np.zeros(2)) == pytest.approx(0.0)
    np.testing.assert_allclose(disk.normal(np.array([0.0, 0.1])), [0.0, -1.0])
    np.testing.assert_allclose(disk.boundary_point(0.0), [0.0, 0.0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(-math.pi, math.pi), c=st.floats(0.05, 0.5))
def test_tangency_condition(phi, c):
    dom = make_tangent_ball(2, c)
    x = dom.boundary_point(phi)
    n = dom.normal(x)
    assert abs(dom.rho(x)) < 1e-12
    assert abs(float(x @ n)) <= dom.tangency_constant() * float(x @ x) * (1 + 1e-9) + 1e-15
    assert dom.boundary_angle(x) == pytest.approx(phi, abs=1e-9)


def test_make_tangent_ball_validation():
    with pytest.raises(UnsupportedDim):
        make_tangent_ball(4, 0.5)
    with pytest.raises(ValueError):
        make_tangent_ball(2, 0.7)


def test_graded_radii_grading():
    r = graded_radii(1.0, 0.02, 2.0)
    assert np.all(np.diff(r) > 0)
    assert r[0] == pytest.approx((1 / 100) ** 2)
    pinned = graded_radii(1.0, 0.02, 2.0, pinned=[0.123])
    assert np.any(pinned == 0.123)


def test_mesh_quadrature_and_boundary(mesh, disk):
    assert mesh.weights.sum() == pytest.approx(disk.volume, rel=2e-3)
    assert np.all(np.abs(disk.rho(mesh.nodes[mesh.boundary])) < 1e-12)
    assert np.all(mesh.rho[mesh.interior] > 0)
    assert np.any(np.all(mesh.nodes == 0, axis=1)), "the singular point is a mesh node"


def test_mesh_is_graded_toward_origin(mesh):
    near = mesh.spacing_at_radius(np.array([0.01]))[0]
    far = mesh.spacing_at_radius(np.array([0.5]))[0]
    assert near < far / 5


def test_mesh_validation(disk):
    with pytest.raises(MeshTooCoarse):
        build_graded_mesh(disk, 0.8)
    with pytest.raises(ValueError):
        build_graded_mesh(disk, 0.02, q=0.5)


def test_three_dimensional_grid():
    dom = make_tangent_ball(3, 0.5)
    m = build_graded_mesh(dom, 0.1, 2.0)
    assert m.kind == "grid" and m.dim == 3
    assert m.weights.sum() == pytest.approx(dom.volume, rel=0.1)
    assert np.all(m.rho[m.interior] > 0)


@pytest.mark.parametrize("delta", [0.02, 0.1, 0.3])
def test_layer_surface(mesh, disk, delta):
    layer = boundary_layer(mesh, delta)
    exact = disk.layer_area(delta)
    assert layer.point_weights.sum() == pytest.approx(exact, rel=1e-12)
    assert layer.surface == pytest.approx(exact, rel=0.1)
    np.testing.assert_allclose(disk.rho(layer.points), delta, atol=1e-12)


def test_layer_unresolved(mesh):
    with pytest.raises(LayerUnresolved):
        boundary_layer(mesh, 0.7)
    with pytest.raises(LayerUnresolved):
        boundary_layer(mesh, 0.0)


def test_mesh_export(mesh_coarse, tmp_path):
    meta = mesh_coarse.export(tmp_path)
    data = json.loads((tmp_path / "mesh.json").read_text())
    assert data == meta
    lines = (tmp_path / meta["nodes_csv"]).read_text().splitlines()
    assert len(lines) == mesh_coarse.n_nodes + 1
