import numpy as np
import pytest

from screened_vp.discretization import (RadialGrid, SpaceTimeField, SpatialGrid, TimeGrid, VelocityGrid,
                                        integrate_velocity, sample)


def test_gaussian_transform_matches_closed_form():
    g = SpatialGrid(3, 12.0, 64)
    x = g.coords()
    r2 = sum(c ** 2 for c in x)
    f = np.exp(-r2 / 2)
    k2 = g.k2()
    exact = (2 * np.pi) ** 1.5 * np.exp(-k2 / 2)
    assert np.max(np.abs(g.forward(f) - exact)) < 1e-12 * exact.max()
    assert np.max(np.abs(g.inverse(g.forward(f)) - f)) < 1e-13


def test_gradient_of_single_mode():
    g = SpatialGrid(3, np.pi, 16)
    x, y, z = g.coords()
    f = np.sin(2 * x) * np.cos(y) + 0 * z
    grad = g.gradient(f)
    assert np.max(np.abs(grad[0] - 2 * np.cos(2 * x) * np.cos(y))) < 1e-12
    assert np.max(np.abs(grad[1] + np.sin(2 * x) * np.sin(y))) < 1e-12
    assert np.max(np.abs(grad[2])) < 1e-12


def test_radial_transform_of_gaussian():
    rg = RadialGrid(40.0, 512)
    f = np.exp(-rg.r ** 2 / 2)
    exact = (2 * np.pi) ** 1.5 * np.exp(-rg.k ** 2 / 2)
    assert np.max(np.abs(rg.forward(f) - exact)) < 1e-10
    assert np.max(np.abs(rg.inverse(exact) - f)) < 1e-10
    dprof = rg.inverse_derivative(exact)
    assert np.max(np.abs(dprof - (-rg.r * f))) < 1e-9
    assert abs(rg.integrate(f) - (2 * np.pi) ** 1.5) < 1e-10


def test_velocity_quadrature_of_maxwellian():
    vg = VelocityGrid(3, 8.0, 32)
    v = vg.coords()
    m = np.exp(-sum(c ** 2 for c in v) / 2) / (2 * np.pi) ** 1.5
    assert abs(integrate_velocity(m, vg) - 1.0) < 1e-12
    assert vg.gaussian_tail() < 1e-14


def test_grid_validation():
    with pytest.raises(ValueError):
        SpatialGrid(3, 1.0, 15)
    with pytest.raises(ValueError):
        TimeGrid([0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([0.5, 1.0])
    g = SpatialGrid(3, 1.0, 4)
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros((2, 4, 4)), TimeGrid.uniform(1.0, 1), g)
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        sample(lambda x, y, z: 1.0 / (x * 0), g)


def test_time_grid_properties():
    t = TimeGrid.uniform(2.0, 8)
    assert t.is_uniform and t.dt == 0.25 and t.T == 2.0
    geo = TimeGrid.geometric(0.5, 8.0, 4)
    assert not geo.is_uniform
    with pytest.raises(ValueError):
        geo.dt
