import numpy as np
import pytest
from scipy import integrate

from screened_vp import equilibria as eq
from screened_vp.discretization import VelocityGrid


def test_maxwellian_normalisation():
    m = eq.maxwellian(3)
    assert abs(m.fourier(np.zeros(3)) - 1.0) < 1e-15
    assert abs(m.mu(np.zeros(3)) - (2 * np.pi) ** -1.5) < 1e-15
    vg = VelocityGrid(3, 8.0, 32)
    v = np.stack(np.broadcast_arrays(*vg.coords()), -1)
    assert abs(vg.integrate(m.mu(v)) - 1.0) < 1e-8


def test_fourier_matches_quadrature(rng):
    m = eq.double_maxwellian(3, 3.0, 0.3)
    vg = VelocityGrid(3, 10.0, 48)
    v = np.stack(np.broadcast_arrays(*vg.coords()), -1)
    mu = m.mu(v)
    for eta in rng.normal(0, 1.0, (4, 3)):
        num = vg.integrate(mu * np.exp(-1j * v @ eta))
        assert abs(num - m.fourier(eta)) < 1e-9
        assert abs(m.fourier(eta)) <= m.fourier(np.zeros(3)).real + 1e-15


def test_degenerate_mixtures():
    v = np.array([[0.3, -1.0, 2.0], [0.0, 0.0, 0.0]])
    assert np.allclose(eq.double_maxwellian(3, 0.0).mu(v), eq.maxwellian(3).mu(v), rtol=0, atol=1e-16)
    one = eq.double_maxwellian(3, 2.0, weight=1.0)
    eta = np.array([[0.4, 0.1, -0.3]])
    assert np.allclose(abs(one.fourier(eta)), abs(eq.maxwellian(3).fourier(eta)), rtol=1e-14)
    with pytest.raises(ValueError):
        eq.double_maxwellian(3, 1.0, weight=1.5)


def test_gradient_is_derivative():
    m = eq.double_maxwellian(3, 1.5)
    v = np.array([0.2, -0.7, 1.1])
    h = 1e-6
    num = np.array([(m.mu(v + h * e) - m.mu(v - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.max(np.abs(num - m.grad(v))) < 1e-10


def test_weighted_norm_radial_oracle():
    # int |grad mu| dv for the Maxwellian: radial quadrature r * mu(r) * 4 pi r^2
    m = eq.maxwellian(3)
    exact, _ = integrate.quad(lambda r: 4 * np.pi * r ** 3 * np.exp(-r * r / 2) / (2 * np.pi) ** 1.5, 0, 40)
    assert abs(exact - 8 * np.pi / (2 * np.pi) ** 1.5) < 1e-12
    got = eq.weighted_norm(m, 0, 0)
    assert abs(got.value - exact) < 5e-5 * exact
    # trapezoid in (v_1, |v_perp|): second order
    fine = eq.weighted_norm(m, 0, 0, n_axial=1601, n_radial=801)
    assert 3.5 < abs(got.value - exact) / abs(fine.value - exact) < 4.5
    assert eq.weighted_norm(m, 2, 0).value >= got.value
    assert eq.weighted_norm(eq.zero_profile(3), 0, 0).value == 0.0


def test_assumption_gate_rejects_slow_decay():
    m = eq.maxwellian(3)
    rep = eq.assumption_report(m)
    assert np.isfinite(rep["M_star"]) and rep["M_star"] > 0
    slow = eq.GaussianMixture(3, (1.0,), (0.0,), (1.0,), decay_exponent=3.0)
    with pytest.raises(ValueError):
        eq.assumption_report(slow)


def test_kernel_constants_orders():
    m = eq.maxwellian(3)
    mb0, mt0 = eq.kernel_constants(m, 0)
    mb1, mt1 = eq.kernel_constants(m, 1)
    assert mt0 >= mb0 > 0 and mt1 >= mb1 > 0
    with pytest.raises(ValueError):
        eq.kernel_constants(m, 2)
