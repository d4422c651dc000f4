import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import BadIndex, CriticalRange, MuBelowCritical
from hardylab.extrapolate import observed_rate, polynomial_limit, richardson
from hardylab.halfspace import (
    HalfSphereQuadrature, SpectralParams, alpha_exponents, bump_profile, c_mu, critical_mu,
    dirac_identity_residual, exponent_polynomial, gamma_mu, half_sphere_mode, mode_eigenvalue,
    phi_mu, psi1_square_integral, residual_Lmu_separable,
)


@settings(max_examples=200, deadline=None)
@given(N=st.integers(2, 8), shift=st.floats(0.0, 50.0))
def test_exponents_solve_indicial_equation(N, shift):
    mu = critical_mu(N) + shift
    ap, am = alpha_exponents(mu, N)
    sp_ = SpectralParams(mu, N)
    scale = 1 + abs(mu) + ap * ap
    assert abs(exponent_polynomial(ap, sp_)) / scale < 1e-12
    assert abs(exponent_polynomial(am, sp_)) / scale < 1e-12
    assert ap + am == pytest.approx(2 - N, abs=1e-12)
    assert ap >= am


def test_exponents_at_critical_value_coincide():
    for N in (2, 3, 5):
        ap, am = alpha_exponents(critical_mu(N), N)
        assert ap == am == (2 - N) / 2
        assert SpectralParams(critical_mu(N), N).critical


def test_exponents_below_critical_raise():
    with pytest.raises(MuBelowCritical):
        alpha_exponents(-1.01, 2)
    with pytest.raises(MuBelowCritical):
        SpectralParams(-2.3, 3)


def test_mu_zero_exponents():
    assert alpha_exponents(0.0, 2) == (1.0, -1.0)
    assert alpha_exponents(0.0, 3) == (1.0, -2.0)


def test_mode_spectrum_half_circle():
    assert [mode_eigenvalue(k, 2) for k in range(1, 11)] == [float(k * k) for k in range(1, 11)]
    assert mode_eigenvalue(1, 3) == 2.0
    assert mode_eigenvalue(2, 3) == 6.0


@pytest.mark.parametrize("k", [0, -1, 1.5])
def test_mode_index_validation(k):
    with pytest.raises(BadIndex):
        mode_eigenvalue(k, 2)


def test_first_mode_exponents_match_alpha():
    sp_ = SpectralParams(1.3, 3)
    m = half_sphere_mode(1, sp_)
    assert m.alpha_k_plus == pytest.approx(sp_.alpha_plus, abs=1e-14)
    assert m.alpha_k_minus == pytest.approx(sp_.alpha_minus, abs=1e-14)


def test_c_mu_oracles():
    assert c_mu(SpectralParams(0.0, 2)) == pytest.approx(math.pi, abs=1e-12)
    assert c_mu(SpectralParams(0.0, 3)) == pytest.approx(2 * math.pi, abs=1e-12)
    assert psi1_square_integral(2) == pytest.approx(math.pi / 2, abs=1e-13)
    # critical value: the gap factor is dropped
    assert c_mu(SpectralParams(-1.0, 2)) == pytest.approx(math.pi / 2, abs=1e-12)


def test_monte_carlo_quadrature_has_error_estimate():
    q = HalfSphereQuadrature(4, samples=100_000, seed=1)
    val = q.integrate(lambda s: s[..., -1] ** 2)
    exact = math.pi**2 / 4  # |S^3|/2 divided by N
    assert abs(val - exact) < 5 * q.error_estimate + 1e-3


@pytest.mark.parametrize("mu,N", [(-0.75, 2), (0.0, 2), (1.0, 2), (3.0, 2), (0.5, 3), (-2.0, 3)])
def test_gamma_and_phi_are_L_mu_harmonic(mu, N):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, N))
    x[:, -1] = np.abs(x[:, -1]) + 0.05
    x *= (0.9 / np.linalg.norm(x, axis=1))[:, None] * rng.uniform(0.05, 1, size=(50, 1))
    sp_ = SpectralParams(mu, N)
    assert residual_Lmu_separable(x, sp_, "gamma").max() < 1e-10
    assert residual_Lmu_separable(x, sp_, "phi").max() < 1e-10
    # a wrong exponent is detected
    assert residual_Lmu_separable(x, sp_, "gamma", exponent=sp_.alpha_plus + 0.1).max() > 1e-3


def test_critical_phi_has_log_branch():
    sp_ = SpectralParams(-1.0, 2)
    x = np.array([[0.0, 0.25]])
    assert phi_mu(x, sp_)[0] == pytest.approx(math.log(4.0))
    with pytest.raises(CriticalRange):
        phi_mu(np.array([[0.0, 2.0]]), sp_)


def test_gamma_on_axis_is_power():
    sp_ = SpectralParams(1.0, 2)
    r = np.array([0.1, 0.5])
    x = np.stack([0 * r, r], axis=1)
    np.testing.assert_allclose(gamma_mu(x, sp_), r**sp_.alpha_plus)


def test_bump_profile_vanishes_outside_support():
    for p in (2, 3):
        z = bump_profile(0.3, p)
        s = np.array([0.31, 0.5, 2.0])
        assert np.all(z.g(s) == 0) and np.all(z.dg(s) == 0) and np.all(z.d2g(s) == 0)
    z = bump_profile(0.3, 3)
    assert z.at_origin() == 1.0


def test_bump_laplacian_matches_finite_differences():
    z = bump_profile(1.0, 3)
    x = np.array([0.3, 0.4])
    h = 1e-4
    lap = sum((z.value(x + h * e) - 2 * z.value(x) + z.value(x - h * e)) / h**2 for e in np.eye(2))
    assert z.laplacian(x) == pytest.approx(lap, rel=1e-5)


@pytest.mark.parametrize("mu", [-0.75, 0.0, 1.0])
def test_dirac_identity_halfspace(mu):
    assert dirac_identity_residual(bump_profile(0.5, 3), SpectralParams(mu, 2)) <= 1e-3


def test_richardson_exact_for_linear_model():
    t = [0.4, 0.2, 0.1]
    v = [3 + 2 * x for x in t]
    assert richardson(t, v) == pytest.approx(3.0)
    assert richardson(t, [3 + 2 * x * x for x in t], rate=2.0) == pytest.approx(3.0)
    assert polynomial_limit(t, [1 + x - x * x for x in t], degree=2) == pytest.approx(1.0)
    assert observed_rate(t, [1 + x**2 for x in t]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        richardson([1.0], [2.0])
