import math

import numpy as np
import pytest

from hardylab.discretize import GridFunction
from hardylab.errors import HypothesisViolated, WindowTooNarrow
from hardylab.halfspace import SpectralParams, bump_profile, c_mu
from hardylab.kernels import boundary_bump, eigenpair_for, singular_kernel_for
from hardylab.trace import (
    WeakProblemData, boundary_trace, interior_residual, kato_residual, layer_integrals,
    representation_residual, singular_ratio_fit, sphere_mass, weak_solution,
)

WINDOW = (0.6, 2 * math.pi - 0.6)


def _window_mass(mesh, lam):
    from hardylab.fields import boundary_quadrature

    nodes, w = boundary_quadrature(mesh)
    phi = np.mod(mesh.domain.boundary_angle(mesh.nodes[nodes]), 2 * math.pi)
    m = (phi >= WINDOW[0]) & (phi <= WINDOW[1])
    return float(np.sum(w[m] * lam[nodes][m]))


def _nu(mesh):
    d = np.linalg.norm(mesh.nodes - np.array([0.1, 0.55]), axis=1)
    v = np.clip(1 - (d / 0.25) ** 2, 0, None) ** 3
    v[mesh.boundary] = 0
    return v


def test_weak_solution_is_linear(mesh):
    lam = boundary_bump(mesh, 2.0, 0.3)
    a = weak_solution(WeakProblemData(_nu(mesh), lam, 1.0), mesh, 0.0)
    b = weak_solution(WeakProblemData(2 * _nu(mesh), 2 * lam, 2.0), mesh, 0.0)
    np.testing.assert_allclose(b.values, 2 * a.values, rtol=1e-10, atol=1e-12)
    assert WeakProblemData(_nu(mesh), lam, 1.0).scaled(3.0).k == 3.0


@pytest.mark.parametrize("mu", [-0.5, 0.0, 1.0])
def test_representation_identity(mesh, mu):
    data = WeakProblemData(_nu(mesh), boundary_bump(mesh, 1.2, 0.2), 1.0)
    u = weak_solution(data, mesh, mu)
    rr = representation_residual(u, data, mu, [bump_profile(s, 3) for s in (0.9, 0.6, 0.4, 0.25)])
    assert rr["max"] < 0.03
    assert len(rr["per_zeta"]) == 4


def test_sphere_mass_of_singular_kernel(mesh):
    sk = singular_kernel_for(mesh, 0.0)
    pair = eigenpair_for(mesh, 0.0)
    # the arc masses approach c_mu from below as eps shrinks
    masses = [sphere_mass(sk.u, e, pair) for e in (0.32, 0.16, 0.08)]
    assert masses[0] < masses[1] < masses[2] < c_mu(SpectralParams(0.0, 2))
    tr = boundary_trace(sk.u, 0.0)
    assert tr.k_from_mass == pytest.approx(1.0, abs=0.05)
    assert tr.k_hat == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("mu,k", [(0.0, 1.0), (1.0, 2.0), (-0.5, 0.0)])
def test_trace_roundtrip(mesh, mu, k):
    lam = boundary_bump(mesh, 2.5, 0.3)
    u = weak_solution(WeakProblemData(None, lam, k), mesh, mu)
    tr = boundary_trace(u, mu, windows=(WINDOW,))
    truth = _window_mass(mesh, lam)
    assert abs(tr.window_mass[0] - truth) / truth < 0.05
    assert abs(tr.k_hat - k) / max(k, 0.5) < 0.05
    assert tr.gate_residual < 1e-9


def test_trace_gate_rejects_non_solutions(mesh):
    rng = np.random.default_rng(0)
    u = GridFunction(mesh, rng.random(mesh.n_nodes))
    assert interior_residual(u, 0.0) > 1e-3
    with pytest.raises(ValueError):
        boundary_trace(u, 0.0)


def test_layer_integrals_of_harmonic_constant(mesh):
    u = GridFunction(mesh, np.ones(mesh.n_nodes))
    seq = layer_integrals(u, [(0.0, 2 * math.pi)], [0.04, 0.02])[0]
    for delta, val in seq:
        assert val == pytest.approx(2 * math.pi * (0.5 - delta), rel=1e-3)


def test_ratio_fit_needs_layers(mesh):
    u = singular_kernel_for(mesh, 0.0).u
    with pytest.raises(WindowTooNarrow):
        singular_ratio_fit(u, SpectralParams(0.0, 2), (0.2, 0.2001))


@pytest.mark.parametrize("mu", [0.0, 1.0])
def test_kato_inequality(mesh_coarse, mu):
    m = mesh_coarse
    f = _nu(m) - 2 * np.where(m.boundary, 0.0, np.clip(1 - (np.linalg.norm(m.nodes - [-0.1, 0.4], axis=1) / 0.15) ** 2, 0, None) ** 3)
    h = boundary_bump(m, 2.0, 0.3, -0.7)
    for s in (0.3, 0.9):
        k = kato_residual(f, h, m, mu, bump_profile(s, 3))
        assert k["abs_slack"] <= 0.02 and k["pos_slack"] <= 0.02
        assert k["scale"] > 0


def test_kato_hypothesis_at_critical_value(mesh_coarse):
    with pytest.raises(HypothesisViolated):
        kato_residual(np.zeros(mesh_coarse.n_nodes), np.zeros(mesh_coarse.n_nodes), mesh_coarse, -1.0,
                      bump_profile(0.5, 3))
