"""Resolvent kernel tables, the zero-mode cancellation, decay and mapping audits."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .discretization import RadialGrid, SpaceTimeField, TimeGrid
from .fitting import DecayReport, dyadic_indices, fit_power_law, samples_per_decade
from .norms import shift_set, time_weighted
from .penrose import khat_t, penrose_margin
from .volterra import causal_convolve, mode_table, volterra_solve


@dataclass
class KernelTables:
    times: TimeGrid
    grid: object
    ghat: np.ndarray
    khat: np.ndarray = None
    physical: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def zero_mode(self):
        if isinstance(self.grid, RadialGrid):
            return self.ghat[:, 0]
        return self.ghat[(slice(None),) + (0,) * self.grid.d]


@lru_cache(maxsize=16)
def _margin(profile):
    return penrose_margin(profile).certified_margin


def _distinct_radii(grid):
    xi = mode_table(grid)
    r2 = np.round(np.sum(xi ** 2, axis=-1), 12)
    uniq, inv = np.unique(r2, return_inverse=True)
    return np.sqrt(uniq), inv.reshape(r2.shape)


def build_ghat(profile, times, grid, substeps=1, gate=True, richardson=False):
    """Per-mode resolvent ``G = K + K *_t G`` on a uniform time grid.

    The Volterra solve runs on a step ``dt / substeps`` and is sampled back on
    ``times``.  Radial profiles are solved once per distinct ``|xi|``.
    """
    if gate and not profile.is_zero and _margin(profile) <= 0:
        raise ValueError("profile fails the stability margin gate; resolvent not built")
    dt = times.dt / substeps
    fine = TimeGrid.uniform(times.T, (len(times) - 1) * substeps)
    meta = {"profile": getattr(profile, "name", "custom"), "dt": dt, "substeps": substeps}
    if profile.is_radial:
        radii, inv = (_distinct_radii(grid) if not isinstance(grid, RadialGrid)
                      else (grid.k, np.arange(grid.n)))
        xi = np.zeros((radii.size, profile.d))
        xi[:, 0] = radii
        k = khat_t(fine.t[:, None], xi[None], profile).real
        g = volterra_solve(k, k, dt)
        if richardson and substeps % 2 == 0 or richardson and substeps == 1:
            coarse = volterra_solve(k[::2], k[::2], 2 * dt)
            meta["richardson"] = float(np.max(np.abs(g[::2] - coarse)) / 3.0)
        ghat = g[::substeps][:, inv]
        khat = k[::substeps][:, inv]
    else:
        xi = mode_table(grid)
        k = khat_t(fine.t.reshape((-1,) + (1,) * (xi.ndim - 1)), xi[None], profile)
        ghat = volterra_solve(k, k, dt)[::substeps]
        khat = k[::substeps]
    return KernelTables(times, grid, ghat, khat, None, meta)


def invert_to_physical(tables):
    """Physical kernel per time slice; stores the imaginary residue in ``meta``."""
    grid = tables.grid
    if isinstance(grid, RadialGrid):
        tables.physical = grid.inverse(tables.ghat.real)
        tables.meta["imag_residue"] = float(np.max(np.abs(np.imag(tables.ghat)))) if np.iscomplexobj(tables.ghat) else 0.0
        return tables
    full = grid.inverse(tables.ghat, real=False)
    scale = max(np.max(np.abs(full.real)), 1e-300)
    tables.meta["imag_residue"] = float(np.max(np.abs(full.imag)) / scale)
    if tables.meta["imag_residue"] > 1e-10:
        raise ValueError(f"spectrum not conjugate symmetric (imaginary residue {tables.meta['imag_residue']:.2e})")
    tables.physical = full.real
    return tables


def check_cancellation(tables):
    """``max_t |G_hat(t, 0)|``: the kernel integrates to zero at every time."""
    return float(np.max(np.abs(tables.zero_mode())))


def _gradient_sup(tables, gamma):
    grid = tables.grid
    if isinstance(grid, RadialGrid):
        if gamma == 0:
            return np.max(np.abs(tables.physical), axis=-1)
        return np.max(np.abs(grid.inverse_derivative(tables.ghat.real)), axis=-1)
    if gamma == 0:
        return np.max(np.abs(tables.physical).reshape(len(tables.times), -1), axis=-1)
    grads = np.stack([grid.inverse(s * tables.ghat) for s in grid.derivative_symbols()], axis=1)
    return np.max(np.sqrt(np.sum(grads ** 2, axis=1)).reshape(len(tables.times), -1), axis=-1)


def _weighted_l1(tables, gamma, a0):
    grid = tables.grid
    if isinstance(grid, RadialGrid):
        prof = tables.physical if gamma == 0 else grid.inverse_derivative(tables.ghat.real)
        return grid.integrate(np.abs(prof) * grid.r ** a0)
    x = grid.coords()
    rad = np.sqrt(sum(c ** 2 for c in x)) ** a0
    if gamma == 0:
        mag = np.abs(tables.physical)
    else:
        grads = np.stack([grid.inverse(s * tables.ghat) for s in grid.derivative_symbols()], axis=1)
        mag = np.sqrt(np.sum(grads ** 2, axis=1))
    return grid.integrate(mag * rad)


def decay_audit(tables, gamma, m_tilde=1.0, a0=0.5, window=None, slope_tol=None, per_octave=4):
    """Compare ``||grad^gamma G(t)||_inf`` with the ``t^{-(d+gamma+1)}`` envelope."""
    if tables.physical is None:
        invert_to_physical(tables)
    d = tables.grid.d
    times = tables.times
    T = times.T
    window = window or (T / 8, T)
    idx = dyadic_indices(times, min(1.0, window[0]), per_octave)
    t = times.t[idx]
    if samples_per_decade(t, window) < 4:
        raise ValueError("fewer than 4 dyadic samples per decade in the fit window")
    sup = _gradient_sup(tables, gamma)[idx]
    env = 1.0 / (t ** (d + gamma - 1) * (1 + t) ** 2)
    fit = fit_power_law(t, sup, window)
    target = -(d + gamma + 1)
    tol = slope_tol if slope_tol is not None else (0.15 if gamma == 0 else 0.2)
    late = t >= 1.0
    ratio = sup / env
    emp = float(np.max(ratio[late])) / m_tilde if late.any() else np.nan
    wl1 = _weighted_l1(tables, gamma, a0)[idx]
    wenv = m_tilde / (t ** (gamma - 1 - a0) * (1 + t) ** 2) + m_tilde * (t <= 1)
    wfit = fit_power_law(t, wl1, window)
    rep = DecayReport(f"kernel_gamma{gamma}", t, sup, m_tilde * env, fit, target, tol)
    rep.constants = {"empirical_constant": emp, "m_tilde": m_tilde,
                     "weighted_l1_ratio": float(np.max(wl1 / wenv)), "weighted_l1_slope": wfit.slope,
                     "weighted_l1_target": -(gamma + 1 - a0)}
    # the envelope holds with a fixed constant: the last octave must not outgrow the earlier ones
    last = t >= T / 2
    early = late & ~last
    grows = bool(np.max(ratio[last]) > 2.0 * np.max(ratio[early])) if early.any() else True
    rep.checks = {"slope": abs(fit.slope - target) <= tol,
                  "envelope_constant_finite": bool(np.isfinite(emp) and emp <= 1.0),
                  "envelope_not_growing": not grows}
    return rep


def convolve(tables, f):
    """Space-time convolution ``G * f`` with trapezoidal time quadrature per mode."""
    if f.times != tables.times or f.grid != tables.grid:
        raise ValueError("field and kernel tables live on different grids")
    fhat = f.grid.forward(f.values)
    out = causal_convolve(tables.ghat, fhat, tables.times.dt)
    vals = f.grid.inverse(out) if not isinstance(f.grid, RadialGrid) else f.grid.inverse(out.real)
    return SpaceTimeField(vals, f.times, f.grid)


def bounded_map_audit(tables, fields, a, shifts=None):
    """Largest ratio ``||G * f||_a / ||f||_a`` over a battery of fields."""
    shifts = shifts or shift_set(tables.grid)
    ratios = []
    for f in fields:
        den = time_weighted(f.values, f.times, f.grid, a, shifts=shifts).value
        if den == 0:
            continue
        num = time_weighted(convolve(tables, f).values, f.times, f.grid, a, shifts=shifts).value
        ratios.append(num / den)
    return (max(ratios) if ratios else 0.0), ratios


def decay_battery(times, grid, count=5):
    """Gaussians of varying width and decay envelope, mean removed."""
    x = grid.coords()
    r2 = sum(c ** 2 for c in x)
    out = []
    for j in range(count):
        width = 0.75 + 0.5 * j
        power = grid.d * (0.5 + 0.25 * (j % 3))
        prof = np.exp(-r2 / (2 * width ** 2)) / (2 * np.pi * width ** 2) ** (grid.d / 2)
        env = (1 + times.t ** 2) ** (-power / 2)
        out.append(SpaceTimeField(env[:, None, None, None] * prof[None] if grid.d == 3
                                  else np.multiply.outer(env, prof), times, grid))
    return out
