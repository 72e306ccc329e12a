import numpy as np
import pytest

from screened_vp import characteristics as ch
from screened_vp.discretization import SpaceTimeField, SpatialGrid, TimeGrid, VelocityGrid
from screened_vp.transport_ops import evaluate_field

XG = SpatialGrid(3, 6.0, 8)
VG = VelocityGrid(3, 4.0, 8)
TIMES = TimeGrid.uniform(4.0, 16)


def smooth_field(amp=0.05):
    k = np.pi / XG.L
    x = XG.coords(sparse=False)
    vals = [amp * np.exp(-t / 4) * np.stack([np.sin(k * x[0]), 0.5 * np.cos(2 * k * x[1]),
                                              0.3 * np.sin(k * (x[2] + x[0]))]) for t in TIMES.t]
    return SpaceTimeField(np.stack(vals), TIMES, XG, vector=True)


def test_trig_interpolation_exact_for_band_limited_field(rng):
    E = smooth_field()
    pts = rng.uniform(-6, 6, size=(10, 3))
    tau = rng.uniform(0, 4, size=10)
    k = np.pi / XG.L
    got = evaluate_field(E, tau, pts)
    # linear in time between nodes
    n = np.minimum((tau / TIMES.dt).astype(int), len(TIMES) - 2)
    w = tau / TIMES.dt - n
    amp = 0.05 * ((1 - w) * np.exp(-TIMES.t[n] / 4) + w * np.exp(-TIMES.t[n + 1] / 4))
    want = amp[:, None] * np.stack([np.sin(k * pts[:, 0]), 0.5 * np.cos(2 * k * pts[:, 1]),
                                    0.3 * np.sin(k * (pts[:, 2] + pts[:, 0]))], axis=1)
    assert np.max(np.abs(got - want)) <= 1e-13


def test_flow_checks_small_grid():
    metrics, checks = ch.flow_checks(smooth_field(), XG, VG, 2.0, count=8)
    assert all(checks.values()), metrics


def test_group_property(rng):
    E = smooth_field()
    x0, v0 = ch.phase_points(XG, VG, 6, seed=1)
    assert ch.group_defect(E, 2, 7, 12, x0, v0) <= 1e-12


def test_node_times_enforced():
    with pytest.raises(ValueError):
        ch.integrate_flow(smooth_field(), 0.1, np.zeros((1, 3)), np.zeros((1, 3)))


def test_linear_response_of_straightened_maps():
    x0, v0 = ch.phase_points(XG, VG, 4, seed=2)
    w = x0 - 4.0 * v0
    full = ch.stencil_flow(smooth_field(0.02), 4.0, w, v0, 0.1, 0.1)
    half = ch.stencil_flow(smooth_field(0.01), 4.0, w, v0, 0.1, 0.1)
    rep = ch.decay_audit(full, 0.75, half)
    assert all(rep.checks.values()), rep.constants


def test_straightened_maps_vanish_without_field():
    zero = ch.constant_field(np.zeros(3), TIMES, XG)
    x0, v0 = ch.phase_points(XG, VG, 5)
    flow = ch.integrate_flow(zero, 4.0, x0, v0)
    assert np.max(np.abs(flow.Y)) <= 1e-13 and np.max(np.abs(flow.W)) == 0.0


def test_holder_quotient_scales_with_field():
    x0, v0 = ch.phase_points(XG, VG, 3, seed=3)
    w = x0 - 2.0 * v0
    full, delta = ch.holder_v_seminorm(smooth_field(0.02), 2.0, w, v0, 0.75, steps=(0.5,))
    half, _ = ch.holder_v_seminorm(smooth_field(0.01), 2.0, w, v0, 0.75, steps=(0.5,))
    zero, _ = ch.holder_v_seminorm(ch.constant_field(np.zeros(3), TIMES, XG), 2.0, w, v0, 0.75)
    assert delta == 0.125 and zero <= 1e-9
    assert abs(full / half - 2.0) <= 0.1
