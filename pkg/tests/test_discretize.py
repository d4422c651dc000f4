import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.discretize import (
    GridFunction, assemble, critical_limit_values, hardy_remainder_check, potential_values,
    quadratic_form, relative_residual, solve_dirichlet, stiffness_matrix,
)
from hardylab.errors import MuBelowCritical, NotSPD


def test_stiffness_symmetric_with_constant_kernel(mesh):
    K = stiffness_matrix(mesh)
    assert abs(K - K.T).max() < 1e-12
    assert np.abs(K @ np.ones(mesh.n_nodes)).max() < 1e-10


def test_stiffness_integrates_linear_gradient(mesh, disk):
    # int |grad x_1|^2 = |Omega|
    x1 = mesh.nodes[:, 0]
    assert x1 @ (stiffness_matrix(mesh) @ x1) == pytest.approx(disk.volume, rel=2e-3)


def test_p1_reproduces_linear_harmonic(mesh):
    sys = assemble(mesh, 0.0)
    lin = 0.3 * mesh.nodes[:, 0] - 2.0 * mesh.nodes[:, 1] + 1.0
    u = solve_dirichlet(sys, None, lin)
    assert np.abs(u.values - lin).max() < 1e-10
    assert relative_residual(sys, u) < 1e-10


def test_potential_truncation(mesh):
    V = potential_values(mesh)
    Ve = potential_values(mesh, "truncated", 0.1)
    assert np.all(Ve <= 100.0 + 1e-12)
    m = mesh.radius >= 0.1
    np.testing.assert_allclose(Ve[m], V[m])


def test_assemble_validation(mesh):
    with pytest.raises(ValueError):
        assemble(mesh, 0.0, "bogus")
    with pytest.raises(ValueError):
        assemble(mesh, 0.0, "truncated")
    with pytest.raises(MuBelowCritical):
        assemble(mesh, -1.5)


@pytest.mark.parametrize("mu", [-0.75, -0.5, 0.0, 2.0])
def test_spd_above_critical_value(mesh_coarse, mu):
    assert assemble(mesh_coarse, mu).is_positive_definite()


@pytest.mark.parametrize("mu", [-1.0, -0.8])
def test_near_critical_reports_not_spd(mesh_coarse, mu):
    # the lumped potential on the rings next to 0 overshoots the Hardy constant
    sys = assemble(mesh_coarse, mu)
    with pytest.raises(NotSPD) as e:
        sys.require_spd()
    assert e.value.context["negative_pivots"] >= 1


def test_comparison_principle(mesh_coarse):
    """Positive load gives a positive solution, and a larger potential a smaller one."""
    rhs = np.ones(mesh_coarse.n_nodes)
    u0 = solve_dirichlet(assemble(mesh_coarse, 0.0), rhs)
    u1 = solve_dirichlet(assemble(mesh_coarse, 1.0), rhs)
    I = mesh_coarse.interior
    assert np.all(u1.values[I] > 0)
    assert np.all(u1.values[I] <= u0.values[I] + 1e-14)


def test_eps_monotone_truncated_family(mesh_coarse):
    rhs = np.ones(mesh_coarse.n_nodes)
    vals = [solve_dirichlet(assemble(mesh_coarse, 1.0, "truncated", e), rhs).values for e in (0.2, 0.1, 0.05)]
    assert np.all(np.diff(np.stack(vals), axis=0) <= 1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_hardy_remainder_on_random_fields(mesh_coarse, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=mesh_coarse.n_nodes) * mesh_coarse.rho
    v[mesh_coarse.boundary] = 0.0
    lhs, rhs = hardy_remainder_check(GridFunction(mesh_coarse, v))
    assert lhs >= rhs >= 0


def test_quadratic_form_matches_operator(mesh_coarse):
    sys = assemble(mesh_coarse, 0.7)
    rng = np.random.default_rng(3)
    v = np.zeros(mesh_coarse.n_nodes)
    v[sys.interior] = rng.normal(size=sys.interior.size)
    u = GridFunction(mesh_coarse, v)
    assert quadratic_form(u, 0.7) == pytest.approx(float(v[sys.interior] @ sys.apply(u)), rel=1e-12)


def test_grid_function_arithmetic(mesh_coarse):
    a = GridFunction(mesh_coarse, np.ones(mesh_coarse.n_nodes))
    b = 2 * a - a + a
    np.testing.assert_allclose(b.values, 2.0)
    assert b.trace.size == mesh_coarse.boundary_nodes.size


def test_critical_limit_values():
    out = critical_limit_values(lambda mu: mu * mu, -1.0)
    assert out["values"][-1] == pytest.approx(1.0, abs=3e-3)


def test_truncated_potential_example(disk):
    from hardylab.geometry import build_graded_mesh

    m = build_graded_mesh(disk, 0.04, pinned_radii=[0.05])
    sys = assemble(m, 1.0, "truncated", 0.1)
    ring = np.isclose(m.radius, 0.05) & ~m.boundary
    assert ring.any()
    np.testing.assert_allclose(sys.potential[ring], 100.0)
