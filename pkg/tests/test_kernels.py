import math

import numpy as np
import pytest

from hardylab.errors import DataUnresolved, NonmonotoneSequence
from hardylab.fields import interpolate
from hardylab.halfspace import SpectralParams, bump_profile
from hardylab.kernels import (
    BoundaryDatum, boundary_bump, boundary_integral, dual_weight, eigenpair_for, exhaustion_schedule,
    green_solve, harmonic_extension, kernel_vanishing_at_origin, poisson_dual_identity, poisson_limit,
    poisson_solution, ratio_profile, reduced_measure_gap, singular_dirac_identity, singular_kernel,
    singular_kernel_for, snap_to_rings, system_for, truncated_poisson,
)


def exact_phi0(x, c=0.5):
    """mu = 0 singular kernel of the tangent disk, normalised like x_N/|x|^2 at 0."""
    C = np.array([0.0, c])
    return (c * c - np.sum((x - C) ** 2, axis=-1)) / (2 * c * np.sum(x * x, axis=-1))


def test_boundary_bump_mass(mesh):
    d = boundary_bump(mesh, 1.5, 0.3, mass=2.0)
    assert boundary_integral(mesh, d, include_origin=True) == pytest.approx(2.0)
    assert np.all(d[~mesh.boundary] == 0) and np.all(d >= 0)
    with pytest.raises(DataUnresolved):
        boundary_bump(mesh, 1.5, 1e-4)


def test_harmonic_extension_of_constant(mesh):
    u = harmonic_extension(mesh, np.where(mesh.boundary, 1.0, 0.0))
    np.testing.assert_allclose(u.values, 1.0, atol=1e-10)


def test_disk_poisson_kernel_at_centre(mesh):
    # harmonic measure density at the centre of a disk is 1/(2 pi c)
    d = boundary_bump(mesh, 2.0, 0.2)
    v = interpolate(mesh, harmonic_extension(mesh, d).values, mesh.domain.center[None, :])[0]
    assert v == pytest.approx(1 / math.pi, rel=0.01)


def test_green_solve_positive_and_linear(mesh_coarse):
    sys = system_for(mesh_coarse, 1.0)
    nu = np.where(mesh_coarse.boundary, 0.0, 1.0)
    g1, g2 = green_solve(sys, nu), green_solve(sys, 3 * nu)
    assert np.all(g1.values[mesh_coarse.interior] > 0)
    np.testing.assert_allclose(g2.values, 3 * g1.values, rtol=1e-10)


@pytest.mark.parametrize("mu", [2.0, -0.5])
def test_poisson_limit_monotone(mesh_coarse, mu):
    d = boundary_bump(mesh_coarse, math.pi / 2, 0.3)
    pl = poisson_limit(mesh_coarse, mu, BoundaryDatum(d), [0.4, 0.2, 0.1, 0.05])
    assert pl.max_violation <= 1e-8
    assert pl.eps[-1] == 0.0
    np.testing.assert_allclose(pl.u.values, poisson_solution(mesh_coarse, mu, d).values)
    h0 = harmonic_extension(mesh_coarse, d).values
    if mu > 0:
        assert np.all(pl.u.values <= h0 + 1e-12)
    else:
        assert np.all(pl.u.values >= h0 - 1e-12)


def test_poisson_limit_schedule_validation(mesh_coarse):
    d = boundary_bump(mesh_coarse, math.pi / 2, 0.3)
    with pytest.raises(ValueError):
        poisson_limit(mesh_coarse, 1.0, BoundaryDatum(d), [0.4, 0.2, 0.1])
    with pytest.raises(ValueError):
        poisson_limit(mesh_coarse, 1.0, BoundaryDatum(d), [0.4, 0.2, 0.3, 0.1])


def test_truncated_poisson_keeps_boundary_data(mesh_coarse):
    d = boundary_bump(mesh_coarse, 2.0, 0.3)
    u = truncated_poisson(mesh_coarse, 1.0, 0.1, BoundaryDatum(d))
    B = mesh_coarse.boundary
    np.testing.assert_allclose(u.values[B], d[B])


def test_poisson_dual_identity_mu0(mesh):
    d = boundary_bump(mesh, math.pi / 2, 0.3)
    out = poisson_dual_identity(poisson_solution(mesh, 0.0, d), d, eigenpair_for(mesh, 0.0),
                                [bump_profile(0.9, 3), bump_profile(0.5, 3)])
    assert max(o["residual"] for o in out) < 0.02


def test_dual_weight_scale(mesh):
    pair = eigenpair_for(mesh, 0.0)
    ghat, c1 = dual_weight(pair)
    np.testing.assert_allclose(ghat * c1, pair.gamma.values)


def test_vanishing_control_mu0(mesh_coarse):
    rec = kernel_vanishing_at_origin(mesh_coarse, 0.0, (0.2, 0.1, 0.05))
    assert rec.values[-1][0] == pytest.approx(1 / math.pi, rel=0.05)


def test_vanishing_values_decrease_for_positive_mu(mesh):
    rec = kernel_vanishing_at_origin(mesh, 1.0, (0.2, 0.1, 0.05))
    assert rec.strictly_decreasing
    # decay rate close to alpha_+ - 1 for a probe away from 0
    assert rec.rate == pytest.approx(SpectralParams(1.0, 2).alpha_plus - 1, abs=0.1)


def test_vanishing_rejects_negative_mu(mesh_coarse):
    with pytest.raises(ValueError):
        kernel_vanishing_at_origin(mesh_coarse, -0.5)


def test_reduced_measure_gap_shrinks(mesh):
    d = boundary_bump(mesh, 2.0, 0.3)
    g = reduced_measure_gap(mesh, 1.0, d, 1.0, (0.2, 0.1, 0.05))
    vals = [row[0] for row in g["gap"]]
    assert vals[0] > vals[1] > vals[2] > 0


def test_exhaustion_schedule(mesh, mesh_coarse):
    eps = exhaustion_schedule(mesh)
    assert len(eps) == 4 and all(b < a for a, b in zip(eps, eps[1:]))
    assert set(eps) <= set(mesh.ring_radii.tolist())
    assert snap_to_rings(mesh, [mesh.ring_radii[7] * 1.0001]) == [mesh.ring_radii[7]]
    with pytest.raises(DataUnresolved):
        exhaustion_schedule(mesh_coarse)


def test_singular_kernel_mu0_against_closed_form(mesh):
    sk = singular_kernel_for(mesh, 0.0)
    assert sk.max_violation <= 1e-8
    assert sk.mass_ratio == pytest.approx(1.0, abs=0.05)
    r = np.linspace(0.1, 0.8, 8)
    pts = np.stack([0 * r, r], axis=1)
    num = interpolate(mesh, sk.u.values, pts)
    np.testing.assert_allclose(num, exact_phi0(pts), rtol=0.02)


def test_singular_kernel_ratio_and_identity(mesh):
    sk = singular_kernel_for(mesh, 0.0)
    t = sk.region_radius
    _, ratio = ratio_profile(sk.u, sk.params, (t, 4 * t))
    assert abs(ratio[0] - 1) < 0.15
    res = singular_dirac_identity(sk.u, eigenpair_for(mesh, 0.0), [bump_profile(0.9, 3)])
    assert res[0]["residual"] < 0.1


def test_singular_kernel_rejects_unresolved_eps(mesh):
    with pytest.raises(DataUnresolved):
        singular_kernel(mesh, 0.0, [mesh.ring_radii[3], mesh.ring_radii[2], mesh.ring_radii[1], mesh.ring_radii[0]])


def test_singular_kernel_detects_nonmonotone_schedule(mesh):
    # increasing eps reverses the monotone ordering
    eps = exhaustion_schedule(mesh)[::-1]
    with pytest.raises(NonmonotoneSequence):
        singular_kernel(mesh, 0.0, eps)
