"""Mode-wise Volterra solves for the linearised density.

Each Fourier mode of the linearised density obeys a scalar Volterra equation
of the second kind, ``x(t) = s(t) + int_0^t k(t - s) x(s) ds``.  The integral is
discretised with the trapezoidal convolution rule on a uniform grid, which is
second order and explicit whenever ``k(0) = 0``.
"""
from dataclasses import dataclass, field

import numba
import numpy as np

from .discretization import RadialGrid, SpaceTimeField, TimeGrid
from .fitting import DecayReport, dyadic_indices, fit_power_law, log_drift
from .penrose import khat_t


@numba.njit(parallel=True, cache=True)
def _volterra_kernel(k, s, dt, solve):
    # k, s: (modes, steps); returns x with x_n = s_n + dt * trapz(k * x)_n
    modes, steps = s.shape
    x = np.zeros_like(s)
    for m in numba.prange(modes):
        km = k[m]
        sm = s[m]
        if solve:
            denom = 1.0 - 0.5 * dt * km[0]
            x[m, 0] = sm[0]
            for n in range(1, steps):
                acc = 0.5 * km[n] * x[m, 0]
                for j in range(1, n):
                    acc += km[n - j] * x[m, j]
                x[m, n] = (sm[n] + dt * acc) / denom
        else:
            for n in range(1, steps):
                acc = 0.5 * (km[n] * sm[0] + km[0] * sm[n])
                for j in range(1, n):
                    acc += km[n - j] * sm[j]
                x[m, n] = dt * acc
            x[m, 0] = 0.0
    return x


def _as_modes(a):
    a = np.asarray(a)
    return np.ascontiguousarray(a.reshape(a.shape[0], -1).T), a.shape


def _common_dtype(*arrays):
    if any(np.iscomplexobj(a) for a in arrays):
        return np.complex128
    return np.float64


def volterra_solve(k, s, dt):
    """Solve ``x = s + k *_t x`` for tables indexed (time, modes...)."""
    dtype = _common_dtype(k, s)
    km, shape = _as_modes(np.asarray(k, dtype=dtype))
    sm, _ = _as_modes(np.asarray(np.broadcast_to(s, shape), dtype=dtype))
    x = _volterra_kernel(km, sm, float(dt), True)
    out = np.ascontiguousarray(x.T).reshape(shape)
    scale = max(np.max(np.abs(s)), np.max(np.abs(k)), 1e-300)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > 1e12 * scale:
        raise FloatingPointError("Volterra solution grew without bound (unstable kernel or step too coarse)")
    return out


def causal_convolve(k, f, dt):
    """Trapezoidal ``int_0^t k(t - s) f(s) ds`` for tables indexed (time, modes...)."""
    dtype = _common_dtype(k, f)
    km, shape = _as_modes(np.asarray(k, dtype=dtype))
    fm, _ = _as_modes(np.asarray(np.broadcast_to(f, shape), dtype=dtype))
    x = _volterra_kernel(km, fm, float(dt), False)
    return np.ascontiguousarray(x.T).reshape(shape)


def mode_table(grid):
    """Wave vectors (component last) on which mode-wise tables live."""
    if isinstance(grid, RadialGrid):
        return np.stack(grid.wavevectors(), axis=-1)
    return np.stack(np.broadcast_arrays(*grid.wavevectors()), axis=-1)


def kernel_table(profile, times, grid):
    """``Khat(t_n, xi)`` on all modes of ``grid``; real when the profile is radial."""
    xi = mode_table(grid)
    if profile.is_radial and not isinstance(grid, RadialGrid):
        # depends on |xi| only: evaluate on distinct radii and scatter
        r2 = np.round(np.sum(xi ** 2, axis=-1), 12)
        uniq, inv = np.unique(r2, return_inverse=True)
        e1 = np.zeros((uniq.size, profile.d))
        e1[:, 0] = np.sqrt(uniq)
        tab = khat_t(times.t[:, None], e1[None, :, :], profile).real
        return tab[:, inv.reshape(r2.shape)]
    tab = khat_t(times.t.reshape((-1,) + (1,) * (xi.ndim - 1)), xi[None], profile)
    return tab.real if profile.is_radial else tab


@dataclass
class LinearizedRun:
    profile: object
    data: object
    times: TimeGrid
    grid: object
    source: np.ndarray
    density_hat: np.ndarray
    meta: dict = field(default_factory=dict)

    def density(self):
        vals = self.grid.inverse(self.density_hat)
        return SpaceTimeField(vals, self.times, self.grid)

    def source_density(self):
        return SpaceTimeField(self.grid.inverse(self.source), self.times, self.grid)


def free_source(data, xi, t):
    """``S_hat(t, xi)``: the double transform of f0 evaluated at ``(xi, t xi)``."""
    xi = np.asarray(xi, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = t.reshape(t.shape + (1,) * (xi.ndim - 1))
    return data.double_transform(xi, tt[..., None] * xi)


def source_table(data, times, grid):
    xi = mode_table(grid)
    tab = free_source(data, xi, times.t)
    if np.iscomplexobj(tab) and np.all(tab.imag == 0):
        tab = tab.real
    return tab


def solve_mode(profile, xi, source_trace, times):
    """Density trace of one mode: ``rho = S + Khat *_t rho``."""
    xi = np.asarray(xi, dtype=float)
    k = khat_t(times.t, xi[None, :], profile)
    if profile.is_radial:
        k = k.real
    return volterra_solve(k[:, None], np.asarray(source_trace)[:, None], times.dt)[:, 0]


def linear_run(profile, data, times, grid):
    """Linearised density on every mode of ``grid`` over the uniform ``times``."""
    if isinstance(grid, RadialGrid) and not profile.is_radial:
        raise ValueError("radial reduction needs a radially symmetric profile")
    src = source_table(data, times, grid)
    k = kernel_table(profile, times, grid)
    rho = volterra_solve(k, src, times.dt)
    return LinearizedRun(profile, data, times, grid, src, rho)


def wraparound_flag(data, times, grid, widths=6.0):
    """True when the free-streaming spread of the data reaches the box edge before ``T``."""
    spread = np.hypot(data.sigma_x, times.T * data.sigma_v)
    edge = grid.R if isinstance(grid, RadialGrid) else grid.L
    return bool(widths * spread > edge)


def linear_decay_report(run, window=None, a=0.75, tolerance=0.2, l1_variation=0.1, confidence=0.95,
                        per_octave=4):
    """Decay of the linearised density: ``L^inf`` exponent against ``-d``, logarithmic drift,
    ``L^1`` boundedness and the weighted Hölder quotient ``<t>^{a+d} |rho(t)|_{B^a_inf}``."""
    from .norms import besov_seminorm
    grid, times = run.grid, run.times
    d = grid.d
    T = times.T
    window = window or (T / 8, T)
    rho = run.density().values
    idx = dyadic_indices(times, min(1.0, window[0]), per_octave)
    t = times.t[idx]
    sup = np.max(np.abs(rho[idx]).reshape(idx.size, -1), axis=-1)
    fit = fit_power_law(t, sup, window)
    inside = (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12))
    drift, half = log_drift(t[inside], sup[inside], d, confidence)
    # same statistic on the free-streaming density of the same data (no logarithm there)
    free = np.max(np.abs(run.source_density().values[idx]).reshape(idx.size, -1), axis=-1)
    free_drift, free_half = log_drift(t[inside], free[inside], d, confidence)
    l1 = np.array([grid.integrate(np.abs(r)) for r in rho[idx]])
    l1w = l1[inside]
    variation = float((l1w.max() - l1w.min()) / l1w.max())
    hold = np.array([besov_seminorm(r, grid, a, np.inf).value for r in rho[idx]])
    weighted = (1 + t ** 2) ** ((a + d) / 2) * hold
    last = t >= T / 2
    early = (t >= 1.0) & ~last
    rep = DecayReport("linear_density", t, sup, 1.0 / (1 + t) ** d, fit, -d, tolerance)
    rep.constants = {"log_drift": drift, "log_drift_halfwidth": half,
                     "log_loss_rejected": bool(drift + half < 1.0),
                     "free_log_drift": free_drift, "free_log_drift_halfwidth": free_half, "l1": l1.tolist(),
                     "l1_variation": variation, "weighted_holder": weighted.tolist(),
                     "wraparound": wraparound_flag(run.data, times, grid)}
    rep.checks = {"exponent": abs(fit.slope + d) <= tolerance,
                  "no_log_drift": abs(drift) <= half,
                  "l1_bounded": variation <= l1_variation,
                  "weighted_holder_bounded": bool(np.max(weighted[last]) <= 2.0 * np.max(weighted[early])),
                  "no_wraparound": not rep.constants["wraparound"]}
    return rep
