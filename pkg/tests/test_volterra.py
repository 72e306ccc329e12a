import numpy as np

from screened_vp import equilibria as eq
from screened_vp import transport_ops as to
from screened_vp.discretization import RadialGrid, SpatialGrid, TimeGrid
from screened_vp.kernel import build_ghat
from screened_vp.penrose import khat_t
from screened_vp.volterra import (causal_convolve, free_source, kernel_table, linear_decay_report, linear_run,
                                  mode_table, source_table, volterra_solve)


def test_free_source_closed_form():
    data = to.gaussian_data(eps=1e-3, sigma_x=1.5, sigma_v=1.0)
    xi = np.array([[0.3, -0.2, 0.5], [0.0, 0.0, 0.0]])
    t = np.array([0.0, 1.0, 2.5])
    S = free_source(data, xi, t)
    k2 = np.sum(xi ** 2, -1)
    exact = 1e-3 * np.exp(-1.5 ** 2 * k2[None] / 2 - t[:, None] ** 2 * k2[None] / 2)
    assert np.max(np.abs(S - exact)) < 1e-8 * 1e-3
    assert np.all(S[:, 1] == S[0, 1])
    odd = free_source(to.dipole_data(), xi, t)
    assert np.all(odd.real == 0)


def test_zero_kernel_returns_source():
    g = SpatialGrid(3, 6.0, 8)
    times = TimeGrid.uniform(4.0, 40)
    run = linear_run(eq.zero_profile(3), to.gaussian_data(), times, g)
    assert np.array_equal(run.density_hat, run.source.astype(run.density_hat.dtype))


def test_zero_mode_is_untouched():
    g = SpatialGrid(3, 6.0, 8)
    times = TimeGrid.uniform(4.0, 40)
    run = linear_run(eq.maxwellian(3), to.gaussian_data(), times, g)
    assert np.max(np.abs(run.density_hat[:, 0, 0, 0] - run.source[:, 0, 0, 0])) == 0.0


def test_resolvent_form_agrees_with_direct_solve():
    g = RadialGrid(64.0, 128)
    dt = 0.02
    times = TimeGrid.uniform(8.0, 400)
    prof = eq.maxwellian(3)
    run = linear_run(prof, to.gaussian_data(), times, g)
    tables = build_ghat(prof, times, g)
    other = run.source + causal_convolve(tables.ghat, run.source, dt)
    scale = np.max(np.abs(run.source))
    assert np.max(np.abs(run.density_hat - other)) <= 5 * dt ** 2 * scale


def test_mode_decoupling_and_linearity():
    g = SpatialGrid(3, 6.0, 8)
    times = TimeGrid.uniform(3.0, 30)
    prof = eq.maxwellian(3)
    k = kernel_table(prof, times, g)
    s1 = source_table(to.gaussian_data(eps=1.0), times, g)
    s2 = source_table(to.dipole_data(eps=1.0), times, g)
    mask = np.zeros(g.shape, bool)
    mask[1:3] = True
    cut = np.where(mask, 0.0, s1)
    x = volterra_solve(k, cut, times.dt)
    assert np.all(x[:, mask] == 0)
    x1 = volterra_solve(k, s1, times.dt)
    x2 = volterra_solve(k, s2, times.dt)
    x12 = volterra_solve(k, 2 * s1 + 3 * s2, times.dt)
    assert np.max(np.abs(x12 - 2 * x1 - 3 * x2)) < 1e-14 * np.max(np.abs(x12))


def test_second_order_in_dt():
    xi = np.array([[0.7, 0.0, 0.0]])
    prof = eq.maxwellian(3)
    data = to.gaussian_data(eps=1.0)
    vals = []
    for m in (100, 200, 400):
        times = TimeGrid.uniform(5.0, m)
        kt = khat_t(times.t[:, None], xi[None], prof).real
        s = free_source(data, xi, times.t)
        vals.append(volterra_solve(kt, s, times.dt)[-1, 0])
    e1, e2 = abs(vals[0] - vals[2]), abs(vals[1] - vals[2])
    # errors against the finest run: (h^2 - h^2/16) / (h^2/4 - h^2/16) = 5
    assert 4.5 < e1 / e2 < 5.5


def test_free_transport_decay_exponent():
    g = RadialGrid(512.0, 1024)
    times = TimeGrid.uniform(64.0, 1280)
    run = linear_run(eq.zero_profile(3), to.gaussian_data(), times, g)
    rep = linear_decay_report(run, tolerance=0.05 * 3)
    assert abs(rep.fit.slope + 3) <= 0.15
    assert rep.checks["l1_bounded"] and not rep.constants["wraparound"]


def test_mode_table_shapes():
    assert mode_table(SpatialGrid(3, 1.0, 4)).shape == (4, 4, 4, 3)
    assert mode_table(RadialGrid(10.0, 16)).shape == (16, 3)
