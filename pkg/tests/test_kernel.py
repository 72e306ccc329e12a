import numpy as np
import pytest

from screened_vp import equilibria as eq
from screened_vp.discretization import RadialGrid, SpaceTimeField, SpatialGrid, TimeGrid
from screened_vp.kernel import (KernelTables, bounded_map_audit, build_ghat, check_cancellation, convolve,
                                decay_audit, decay_battery, invert_to_physical)
from screened_vp.penrose import khat_t, ktilde
from screened_vp.volterra import causal_convolve, volterra_solve


def test_zero_kernel_gives_zero_resolvent():
    g = SpatialGrid(3, 4.0, 8)
    tables = build_ghat(eq.zero_profile(3), TimeGrid.uniform(2.0, 20), g)
    assert np.all(tables.ghat == 0)
    assert check_cancellation(tables) == 0.0


def test_exponential_toy_resolvent():
    c = 0.6
    errs = []
    for dt in (1e-3, 5e-4):
        t = np.arange(0, 5.0 + dt / 2, dt)
        k = c * np.exp(-t)[:, None]
        g = volterra_solve(k, k, dt)[:, 0]
        errs.append(np.max(np.abs(g - c * np.exp(-(1 - c) * t))))
    assert errs[0] <= 1e-6
    assert errs[0] / errs[1] >= 3.5


def test_causality_and_resolvent_identity(rng):
    times = TimeGrid.uniform(6.0, 300)
    xi = rng.normal(0, 1, (5, 3))
    k = khat_t(times.t[:, None], xi[None], eq.maxwellian(3)).real
    g = volterra_solve(k, k, times.dt)
    res = g - k - causal_convolve(k, g, times.dt)
    assert np.max(np.abs(res)) <= 5 * times.dt ** 2 * np.max(np.abs(k))
    k2 = k.copy()
    k2[200:] += 1.0
    g2 = volterra_solve(k2, k2, times.dt)
    assert np.array_equal(g[:200], g2[:200])


def test_time_transform_matches_symbol(rng):
    prof = eq.maxwellian(3)
    dt = 0.005
    t = np.arange(0, 60.0 + dt / 2, dt)
    for _ in range(10):
        xi = rng.normal(0, 1, 3)
        xi *= rng.uniform(0.5, 2.0) / np.linalg.norm(xi)
        tau = rng.uniform(-3, 3)
        k = khat_t(t[:, None], xi[None], prof).real
        g = volterra_solve(k, k, dt)[:, 0]
        w = np.full(t.size, dt)
        w[[0, -1]] *= 0.5
        num = np.sum(w * np.exp(-1j * tau * t) * g)
        kt = ktilde(tau, xi, prof)
        assert abs(num - kt / (1 - kt)) < 1e-4


def test_single_mode_inversion_and_parseval():
    g = SpatialGrid(3, np.pi, 8)
    times = TimeGrid.uniform(1.0, 2)
    ghat = np.zeros((3,) + g.shape, complex)
    a = np.array([0.0, 1.0, -2.0])
    ghat[:, 1, 0, 0] = a
    ghat[:, -1, 0, 0] = a
    tables = invert_to_physical(KernelTables(times, g, ghat))
    x = g.coords()[0]
    expect = 2 / g.volume * a[:, None, None, None] * np.cos(x)[None]
    assert np.max(np.abs(tables.physical - np.broadcast_to(expect, tables.physical.shape))) < 1e-14
    l2_space = np.sum(tables.physical ** 2, axis=(1, 2, 3)) * g.cell
    l2_freq = np.sum(np.abs(ghat) ** 2, axis=(1, 2, 3)) / g.volume
    assert np.max(np.abs(l2_space - l2_freq)) < 1e-8


def test_cancellation_detector_fires():
    g = SpatialGrid(3, 6.0, 8)
    tables = build_ghat(eq.maxwellian(3), TimeGrid.uniform(4.0, 40), g)
    assert check_cancellation(tables) <= 1e-10
    tables.ghat[5] += 1e-3
    assert check_cancellation(tables) > 1e-10


@pytest.mark.filterwarnings("ignore:non-radial profile")
def test_unstable_profile_gate():
    # two well separated beams violate the margin threshold
    unstable = eq.double_maxwellian(3, 8.0, 0.5, theta=0.05)
    with pytest.raises(ValueError):
        build_ghat(unstable, TimeGrid.uniform(1.0, 4), RadialGrid(10.0, 16))


def test_decay_audit_is_not_vacuous():
    rg = RadialGrid(64.0, 256)
    times = TimeGrid.uniform(64.0, 256)
    toy = 0.99 * np.exp(-0.01 * times.t)[:, None] * np.ones(rg.n)[None]
    rep = decay_audit(KernelTables(times, rg, toy), 0)
    assert not rep.checks["envelope_not_growing"]
    assert not rep.passed


def test_convolution_impulse_and_zero():
    g = SpatialGrid(3, 6.0, 8)
    times = TimeGrid.uniform(2.0, 20)
    tables = build_ghat(eq.maxwellian(3), times, g)
    zero = SpaceTimeField(np.zeros((len(times),) + g.shape), times, g)
    assert np.all(convolve(tables, zero).values == 0)
    # impulse at t = 0 on one mode: trapezoid weight dt/2 times G_hat(t - 0)
    fhat = np.zeros((len(times),) + g.shape, complex)
    fhat[0, 1, 0, 0] = fhat[0, -1, 0, 0] = 1.0
    out = causal_convolve(tables.ghat, fhat, times.dt)
    assert np.max(np.abs(out[1:, 1, 0, 0] - 0.5 * times.dt * tables.ghat[1:, 1, 0, 0])) < 1e-15


def test_bounded_map_constant_is_finite():
    g = SpatialGrid(3, 8.0, 16)
    times = TimeGrid.uniform(4.0, 16)
    tables = build_ghat(eq.maxwellian(3), times, g)
    m, ratios = bounded_map_audit(tables, decay_battery(times, g, 3), 0.75)
    assert np.isfinite(m) and 0 < m < 10 and len(ratios) == 3
