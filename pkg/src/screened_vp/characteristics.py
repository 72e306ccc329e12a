"""Backward phase-space characteristics of ``(v, E(t, x))``.

Trajectories are integrated pointwise with the classical fourth-order
Runge-Kutta scheme from the target time ``t`` down to 0, recording the state at
every node of the field's time grid.  The field is evaluated by trigonometric
interpolation of a periodic sample set (exact for band-limited fields) or, for
whole-space radial fields, by four-point Lagrange interpolation of radial
derivative tables; in time it is linear between stored slices.

Straightened maps use foot points ``w = x - t v`` of the launch state:
``Y_{s,t}(w, v) = X_{s,t}(w + t v, v) - w - s v`` and
``W_{s,t}(w, v) = V_{s,t}(w + t v, v) - v``.
"""
from dataclasses import dataclass, field

import numba
import numpy as np

from .discretization import PeriodicGrid, SpaceTimeField, TimeGrid
from .fitting import DecayReport
from .norms import japanese

_TRIG, _RADIAL = 0, 1


# ---------------------------------------------------------------- field models

class TrigField:
    """Periodic vector field on a Cartesian grid, interpolated trigonometrically."""

    kind = _TRIG

    def __init__(self, E):
        if not isinstance(E, SpaceTimeField) or not E.vector or not isinstance(E.grid, PeriodicGrid):
            raise ValueError("expected a vector SpaceTimeField on a periodic grid")
        self.times = E.times
        self.grid = g = E.grid
        axes = tuple(range(-g.d, 0))
        coef = np.fft.fftn(E.values, axes=axes) / g.size
        nt = len(E.times)
        self.re = np.ascontiguousarray(coef.real.reshape(nt, g.d, -1))
        self.im = np.ascontiguousarray(coef.imag.reshape(nt, g.d, -1))
        self.midx = np.ascontiguousarray(np.stack(np.meshgrid(*([np.arange(g.n)] * g.d), indexing="ij"),
                                                  axis=-1).reshape(-1, g.d))
        self.kax = g.k_axis.copy()
        self.L = g.L
        self.zero = not np.any(E.values)

    @property
    def d(self):
        return self.grid.d

    def args(self):
        dummy = np.zeros((1, 1))
        return (self.re, self.im, self.midx, self.kax, self.L, dummy, dummy, 0.0, 0)


class RadialField:
    """``E = -grad U`` for ``U = u(t, |x|)`` (monopole) or ``U = d/dx_1 u(t, |x|)`` (dipole).

    ``d1``, ``d2`` are tables of ``u'`` and ``u''`` on ``r_j = j h``; the field
    vanishes beyond the table.
    """

    kind = _RADIAL

    def __init__(self, times, h, d1, d2, dipole=False):
        self.times = times
        self.h = float(h)
        self.d1 = np.ascontiguousarray(d1, dtype=float)
        self.d2 = np.ascontiguousarray(d2, dtype=float)
        self.dipole = bool(dipole)
        self.zero = not (np.any(self.d1) or np.any(self.d2))

    d = 3

    @classmethod
    def from_transform(cls, times, grid, uhat, dipole=False):
        """Tables from the radial transform of ``u`` on a ``RadialGrid``."""
        d1 = grid.inverse_derivative(uhat)
        lap = grid.inverse(-grid.k2() * uhat)
        d2 = np.empty_like(d1)
        d2[..., 1:] = lap[..., 1:] - 2.0 * d1[..., 1:] / grid.r[1:]
        d2[..., 0] = lap[..., 0] / 3.0
        return cls(times, grid.h, d1, d2, dipole)

    def args(self):
        dummy = np.zeros((1, 1, 1))
        return (dummy, dummy, np.zeros((1, 3), dtype=np.int64), np.zeros(1), 0.0,
                self.d1, self.d2, self.h, 1 if self.dipole else 0)


def as_field(E):
    if isinstance(E, (TrigField, RadialField)):
        return E
    return TrigField(E)


# ---------------------------------------------------------------- numba kernels

@numba.njit(cache=True)
def _lagrange4(tab, n, j0, w):
    # four-point Lagrange interpolation on a uniform grid; zero beyond the table
    m = tab.shape[1]
    if j0 >= m - 1:
        return 0.0
    if j0 < 1:
        j0 = 1
    if j0 > m - 3:
        j0 = m - 3
    f0 = tab[n, j0 - 1]
    f1 = tab[n, j0]
    f2 = tab[n, j0 + 1]
    f3 = tab[n, j0 + 2]
    return (-w * (w - 1.0) * (w - 2.0) / 6.0 * f0 + (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0 * f1
            - (w + 1.0) * w * (w - 2.0) / 2.0 * f2 + (w + 1.0) * w * (w - 1.0) / 6.0 * f3)


@numba.njit(cache=True)
def _radial_slice(d1, d2, h, dipole, n, x, out):
    r = np.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    s = r / h
    j0 = int(s)
    if j0 < 1:
        j0 = 1
    w = s - j0
    p = _lagrange4(d1, n, j0, w)
    q = _lagrange4(d2, n, j0, w)
    if r < 1e-8:
        p_over_r = d2[n, 0]
        unit = np.zeros(3)
    else:
        p_over_r = p / r
        unit = x[:3] / r
    if dipole == 0:
        for i in range(3):
            out[i] = -p_over_r * x[i]
    else:
        for i in range(3):
            delta = 1.0 if i == 0 else 0.0
            out[i] = -(q * unit[i] * unit[0] + p_over_r * (delta - unit[i] * unit[0]))


@numba.njit(cache=True)
def _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, tau, x, out, ex_re, ex_im, b_re, b_im):
    d = x.size
    n0 = int(tau / dtf + 1e-12)
    if n0 > nt - 2:
        n0 = nt - 2
    if n0 < 0:
        n0 = 0
    th = tau / dtf - n0
    if nt == 1:
        n0 = 0
        th = 0.0
    if kind == 1:
        tmp0 = np.zeros(3)
        tmp1 = np.zeros(3)
        _radial_slice(d1, d2, hr, dipole, n0, x, tmp0)
        if th != 0.0:
            _radial_slice(d1, d2, hr, dipole, n0 + 1, x, tmp1)
        for c in range(3):
            out[c] = (1.0 - th) * tmp0[c] + th * tmp1[c]
        return
    N = kax.size
    for j in range(d):
        for m in range(N):
            ph = kax[m] * (x[j] + L)
            ex_re[j, m] = np.cos(ph)
            ex_im[j, m] = np.sin(ph)
    M = midx.shape[0]
    for m in range(M):
        pr = 1.0
        pi = 0.0
        for j in range(d):
            a = ex_re[j, midx[m, j]]
            bb = ex_im[j, midx[m, j]]
            pr, pi = pr * a - pi * bb, pr * bb + pi * a
        b_re[m] = pr
        b_im[m] = pi
    for c in range(d):
        s0 = 0.0
        s1 = 0.0
        for m in range(M):
            s0 += re[n0, c, m] * b_re[m] - im[n0, c, m] * b_im[m]
        if th != 0.0:
            for m in range(M):
                s1 += re[n0 + 1, c, m] * b_re[m] - im[n0 + 1, c, m] * b_im[m]
        out[c] = (1.0 - th) * s0 + th * s1


@numba.njit(parallel=True, cache=True)
def _flow_kernel(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt,
                 x0, v0, n_target, n_stop, substeps, vmax, X, V, flag):
    P, d = x0.shape
    h = dtf / substeps
    N = kax.size
    M = midx.shape[0]
    for p in numba.prange(P):
        ex_re = np.empty((d, N))
        ex_im = np.empty((d, N))
        b_re = np.empty(M)
        b_im = np.empty(M)
        x = x0[p].copy()
        v = v0[p].copy()
        e = np.empty(d)
        k1x = np.empty(d)
        k1v = np.empty(d)
        k2x = np.empty(d)
        k2v = np.empty(d)
        k3x = np.empty(d)
        k3v = np.empty(d)
        k4v = np.empty(d)
        xt = np.empty(d)
        rec = n_target - n_stop
        X[rec, p] = x
        V[rec, p] = v
        for n in range(n_target, n_stop, -1):
            for sub in range(substeps):
                s = n * dtf - sub * h
                # stage 1
                _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, s, x, e, ex_re, ex_im, b_re, b_im)
                for j in range(d):
                    k1x[j] = v[j]
                    k1v[j] = e[j]
                    xt[j] = x[j] - 0.5 * h * k1x[j]
                # stage 2
                _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, s - 0.5 * h, xt, e,
                          ex_re, ex_im, b_re, b_im)
                for j in range(d):
                    k2x[j] = v[j] - 0.5 * h * k1v[j]
                    k2v[j] = e[j]
                    xt[j] = x[j] - 0.5 * h * k2x[j]
                # stage 3
                _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, s - 0.5 * h, xt, e,
                          ex_re, ex_im, b_re, b_im)
                for j in range(d):
                    k3x[j] = v[j] - 0.5 * h * k2v[j]
                    k3v[j] = e[j]
                    xt[j] = x[j] - h * k3x[j]
                # stage 4
                _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, s - h, xt, e,
                          ex_re, ex_im, b_re, b_im)
                for j in range(d):
                    k4x = v[j] - h * k3v[j]
                    k4v[j] = e[j]
                    x[j] = x[j] - h / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x)
                    v[j] = v[j] - h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j])
            rec = n - 1 - n_stop
            for j in range(d):
                X[rec, p, j] = x[j]
                V[rec, p, j] = v[j]
                if abs(v[j]) > vmax:
                    flag[p] = True


# ---------------------------------------------------------------- flow maps

@dataclass
class FlowMaps:
    """States ``(X, V)_{s_n, t}`` at the nodes ``s_n <= t`` of the field's time grid."""

    t: float
    times: TimeGrid
    x0: np.ndarray          # launch positions at time t, (P, d)
    v0: np.ndarray
    X: np.ndarray           # (n_t + 1, P, d), row n is s = t_n
    V: np.ndarray
    mask: np.ndarray        # True where |V| left the velocity box
    step: float
    order: int = 4
    meta: dict = field(default_factory=dict)

    @property
    def s(self):
        return self.times.t[: self.X.shape[0]]

    @property
    def foot(self):
        return self.x0 - self.t * self.v0

    @property
    def Y(self):
        """``Y_{s,t}`` at the foot points, rows indexed like ``s``."""
        return self.X - self.x0[None] + (self.t - self.s)[:, None, None] * self.v0[None]

    @property
    def W(self):
        return self.V - self.v0[None]


def integrate_flow(E, t, x0, v0, substeps=1, vmax=np.inf, s_stop=0.0):
    """Backward RK4 flow from ``(x0, v0)`` at node time ``t`` to every node ``s >= s_stop``."""
    fld = as_field(E)
    times = fld.times
    dtf = times.dt if len(times) > 1 else 1.0
    n_target = int(round(t / dtf)) if len(times) > 1 else 0
    n_stop = int(round(s_stop / dtf)) if len(times) > 1 else 0
    if len(times) > 1 and (abs(n_target * dtf - t) > 1e-9 * max(1.0, t) or n_target >= len(times)):
        raise ValueError(f"target time {t} is not a node of the field's time grid")
    x0 = np.ascontiguousarray(np.atleast_2d(x0), dtype=float)
    v0 = np.ascontiguousarray(np.atleast_2d(v0), dtype=float)
    x0, v0 = np.broadcast_arrays(x0, v0)
    x0 = np.ascontiguousarray(x0)
    v0 = np.ascontiguousarray(v0)
    P, d = x0.shape
    if d != fld.d:
        raise ValueError("launch points and field have different dimensions")
    rows = n_target - n_stop + 1
    X = np.empty((rows, P, d))
    V = np.empty((rows, P, d))
    flag = np.zeros(P, dtype=np.bool_)
    if fld.zero:
        s = times.t[n_stop:n_target + 1] if len(times) > 1 else np.zeros(1)
        X[:] = x0[None] - (t - s)[:, None, None] * v0[None]
        V[:] = v0[None]
        flag[:] = np.any(np.abs(v0) > vmax, axis=1)
    else:
        _flow_kernel(fld.kind, *fld.args()[:9], float(dtf), len(times), x0, v0, n_target, n_stop,
                     int(substeps), float(vmax), X, V, flag)
    if n_stop:
        pad = np.full((n_stop, P, d), np.nan)
        X = np.concatenate([pad, X])
        V = np.concatenate([pad, V])
    if not (np.all(np.isfinite(X[n_stop:])) and np.all(np.isfinite(V[n_stop:]))):
        raise FloatingPointError("non-finite trajectory state")
    return FlowMaps(float(t), times, x0, v0, X, V, flag, dtf / substeps, 4,
                    {"substeps": int(substeps), "s_stop": s_stop})


def launch_from_feet(w, v, t):
    """Launch states at time ``t`` for foot points ``w``: ``x0 = w + t v``."""
    w = np.atleast_2d(w)
    v = np.atleast_2d(v)
    return w + t * v, v


def phase_points(xgrid, vgrid, count=None, seed=0):
    """Phase-grid points (all, or a reproducible random subset of ``count``)."""
    xs = np.stack(np.broadcast_arrays(*xgrid.coords()), axis=-1).reshape(-1, xgrid.d)
    vs = np.stack(np.broadcast_arrays(*vgrid.coords()), axis=-1).reshape(-1, vgrid.d)
    total = xs.shape[0] * vs.shape[0]
    if count is None or count >= total:
        ix, iv = np.divmod(np.arange(total), vs.shape[0])
    else:
        rng = np.random.default_rng(seed)
        flat = rng.choice(total, size=count, replace=False)
        ix, iv = np.divmod(np.sort(flat), vs.shape[0])
    return xs[ix], vs[iv]


# ---------------------------------------------------------------- audits

def jacobian_determinant(E, t, x0, v0, s=0.0, delta=1e-4, substeps=1):
    """``det d(X, V)_{s,t} / d(x, v)`` by centred differences at each launch point."""
    x0 = np.atleast_2d(x0)
    v0 = np.atleast_2d(v0)
    P, d = x0.shape
    n_s = int(round(s / as_field(E).times.dt)) if len(as_field(E).times) > 1 else 0
    xs, vs = [], []
    for j in range(2 * d):
        for sgn in (1.0, -1.0):
            dx = np.zeros(2 * d)
            dx[j] = sgn * delta
            xs.append(x0 + dx[:d])
            vs.append(v0 + dx[d:])
    flow = integrate_flow(E, t, np.concatenate(xs), np.concatenate(vs), substeps, s_stop=s)
    Z = np.concatenate([flow.X[n_s], flow.V[n_s]], axis=-1).reshape(2 * d, 2, P, 2 * d)
    J = (Z[:, 0] - Z[:, 1]) / (2 * delta)          # (column j, P, row)
    return np.linalg.det(np.transpose(J, (1, 2, 0)))


def convergence_orders(E, t, x0, v0, substeps=(1, 2, 4), reference=32):
    """Errors of the s = 0 state against a fine reference run, one per step count."""
    ref = integrate_flow(E, t, x0, v0, reference)
    errs = []
    for m in substeps:
        run = integrate_flow(E, t, x0, v0, m)
        errs.append(float(max(np.max(np.abs(run.X[0] - ref.X[0])), np.max(np.abs(run.V[0] - ref.V[0])))))
    return np.array(errs)


def stencil_flow(E, t, w, v, hx, hv, substeps=1):
    """Flows at foot points and at their centred neighbours in ``w`` and ``v``."""
    w = np.atleast_2d(w)
    v = np.atleast_2d(v)
    P, d = w.shape
    ws, vs = [w], [v]
    for j in range(d):
        for sgn in (1.0, -1.0):
            e = np.zeros(d)
            e[j] = sgn
            ws.append(w + hx * e)
            vs.append(v)
    for j in range(d):
        for sgn in (1.0, -1.0):
            e = np.zeros(d)
            e[j] = sgn
            ws.append(w)
            vs.append(v + hv * e)
    W = np.concatenate(ws)
    Vv = np.concatenate(vs)
    x0, v0 = launch_from_feet(W, Vv, t)
    flow = integrate_flow(E, t, x0, v0, substeps)
    flow.meta.update({"stencil": (P, d, hx, hv)})
    return flow


def _stencil_parts(arr, P, d, hx, hv):
    blocks = arr.reshape(arr.shape[0], 1 + 4 * d, P, d)
    base = blocks[:, 0]
    gx = np.stack([(blocks[:, 1 + 2 * j] - blocks[:, 2 + 2 * j]) / (2 * hx) for j in range(d)], axis=-1)
    gv = np.stack([(blocks[:, 1 + 2 * d + 2 * j] - blocks[:, 2 + 2 * d + 2 * j]) / (2 * hv) for j in range(d)],
                  axis=-1)
    return base, gx, gv


def flow_suprema(flow, a):
    """Weighted suprema over ``s`` of ``Y``, ``W`` and their first differences."""
    P, d, hx, hv = flow.meta["stencil"]
    Yb, Ygx, Ygv = _stencil_parts(flow.Y, P, d, hx, hv)
    Wb, Wgx, Wgv = _stencil_parts(flow.W, P, d, hx, hv)
    js = japanese(flow.s)

    def sup(arr):
        return np.max(np.abs(arr.reshape(arr.shape[0], -1)), axis=1)

    return {
        "Y": float(np.max(js ** (d - 2 + a) * (sup(Yb) + sup(Ygx)))),
        "grad_v_Y": float(np.max(js ** (d - 3 + a) * sup(Ygv))),
        "W": float(np.max(js ** (d - 1 + a) * (sup(Wb) + sup(Wgx)))),
        "grad_v_W": float(np.max(js ** (d - 2 + a) * sup(Wgv))),
    }


def holder_v_seminorm(E, t, w, v, a, hv=1e-3, steps=(0.25, 0.5, 1.0), substeps=1):
    """``sup_alpha |grad_v Y_{s,t}(w, v + alpha) - grad_v Y_{s,t}(w, v)| / |alpha|^(a - delta)`` over
    axis shifts ``alpha`` and all nodes ``s``, with the loss ``delta = (1 - a) / 2``."""
    w = np.atleast_2d(w)
    v = np.atleast_2d(v)
    P, d = w.shape
    delta = 0.5 * (1.0 - a)
    _, _, g0 = _stencil_parts(stencil_flow(E, t, w, v, hv, hv, substeps).Y, P, d, hv, hv)
    best = 0.0
    for step in steps:
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            _, _, g1 = _stencil_parts(stencil_flow(E, t, w, v + e, hv, hv, substeps).Y, P, d, hv, hv)
            best = max(best, float(np.max(np.abs(g1 - g0))) / step ** (a - delta))
    return best, delta


def decay_audit(flow, a, half_flow=None):
    """Weighted flow suprema; with ``half_flow`` (same points, half the field amplitude) the
    amplitude ratios, which should be close to 2 in the linear-response regime."""
    sup = flow_suprema(flow, a)
    rep = DecayReport("flow", flow.s, np.max(np.abs(flow.Y.reshape(flow.Y.shape[0], -1)), axis=1), None)
    rep.constants = dict(sup)
    if half_flow is not None:
        half = flow_suprema(half_flow, a)
        ratios = {k: (sup[k] / half[k] if half[k] > 0 else np.nan) for k in sup}
        rep.constants.update({f"ratio_{k}": v for k, v in ratios.items()})
        rep.checks = {f"linear_{k}": bool(1.8 <= v <= 2.2) for k, v in ratios.items() if np.isfinite(v)}
    return rep


@dataclass
class PsiMap:
    psi: np.ndarray
    residual: np.ndarray
    iterations: int
    lipschitz: float


def _phi(E, s, t, x, v, substeps):
    if t == s:
        return np.zeros_like(v), x.copy()
    flow = integrate_flow(E, t, x, v, substeps, s_stop=s)
    n_s = int(round(s / flow.times.dt)) if len(flow.times) > 1 else 0
    Xs = flow.X[n_s]
    return -(Xs - x + (t - s) * v) / (t - s), Xs


def psi_solve(E, s, t, x, v, tol=1e-10, max_iter=60, substeps=1, delta=1e-4):
    """Solve ``X_{s,t}(x, Psi) = x - (t - s) v`` by ``Psi <- v - Phi_{s,t}(x, Psi)``."""
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    x, v = (np.ascontiguousarray(a) for a in np.broadcast_arrays(x, v))
    if t <= s:
        return PsiMap(v.copy(), np.zeros(v.shape[0]), 0, 0.0)
    d = v.shape[1]
    # Lipschitz estimate of Phi in v by centred differences
    lip = 0.0
    for j in range(d):
        e = np.zeros(d)
        e[j] = delta
        p1, _ = _phi(E, s, t, x, v + e, substeps)
        p2, _ = _phi(E, s, t, x, v - e, substeps)
        lip = max(lip, float(np.max(np.sum(np.abs(p1 - p2), axis=1) / (2 * delta))))
    if lip >= 1.0:
        raise ValueError(f"Psi iteration not contractive: ||grad_v Phi|| ~ {lip:.3g} >= 1")
    psi = v.copy()
    it = 0
    for it in range(1, max_iter + 1):
        ph, _ = _phi(E, s, t, x, psi, substeps)
        new = v - ph
        upd = float(np.max(np.abs(new - psi)))
        psi = new
        if upd <= tol:
            break
    else:
        raise RuntimeError("Psi iteration did not converge")
    _, Xs = _phi(E, s, t, x, psi, substeps)
    res = np.max(np.abs(Xs - (x - (t - s) * v)), axis=1)
    return PsiMap(psi, res, it, lip)


def constant_field(E0, times, grid):
    """A spatially constant field as a periodic vector SpaceTimeField."""
    E0 = np.asarray(E0, float)
    vals = np.broadcast_to(E0.reshape((1, -1) + (1,) * grid.d), (len(times), grid.d) + grid.shape).copy()
    return SpaceTimeField(vals, times, grid, vector=True)


def group_defect(E, s_idx, r_idx, t_idx, x0, v0, substeps=1):
    """``|flow_{s,r}(flow_{r,t}(z)) - flow_{s,t}(z)|`` at node indices ``s < r < t``."""
    fld = as_field(E)
    dt = fld.times.dt
    direct = integrate_flow(fld, t_idx * dt, x0, v0, substeps)
    mid = (direct.X[r_idx], direct.V[r_idx])
    comp = integrate_flow(fld, r_idx * dt, mid[0], mid[1], substeps)
    return float(max(np.max(np.abs(comp.X[s_idx] - direct.X[s_idx])),
                     np.max(np.abs(comp.V[s_idx] - direct.V[s_idx]))))


def closed_form_errors(times, grid, t, x0, v0, E0):
    """Largest deviations from the exact flows for ``E = 0`` and a constant field ``E0``."""
    zero = constant_field(np.zeros(grid.d), times, grid)
    flow = integrate_flow(zero, t, x0, v0)
    lag = (t - times.t[: flow.X.shape[0]])[:, None, None]
    e_zero = max(float(np.max(np.abs(flow.X - (x0[None] - lag * v0[None])))),
                 float(np.max(np.abs(flow.V - v0[None]))))
    E0 = np.asarray(E0, float)
    flow = integrate_flow(constant_field(E0, times, grid), t, x0, v0)
    Xc = x0[None] - lag * v0[None] + 0.5 * lag ** 2 * E0
    Vc = v0[None] - lag * E0
    e_const = max(float(np.max(np.abs(flow.X - Xc))), float(np.max(np.abs(flow.V - Vc))))
    return e_zero, e_const


def flow_checks(E, xgrid, vgrid, t, count=32, seed=0, s_psi=None, E0=(0.1, -0.05, 0.02)):
    """Closed forms, step order, volume preservation and the ``Psi`` residual on sampled phase points."""
    fld = as_field(E)
    times = fld.times
    x0, v0 = phase_points(xgrid, vgrid, count, seed)
    e_zero, e_const = closed_form_errors(times, xgrid, t, x0, v0, E0)
    errs = convergence_orders(fld, t, x0, v0)
    orders = np.log2(errs[:-1] / errs[1:])
    det = jacobian_determinant(fld, t, x0, v0)
    s_psi = times.t[int(round(0.5 * t / times.dt))] if s_psi is None else s_psi
    psi = psi_solve(fld, s_psi, t, x0, v0)
    metrics = {"zero_field_error": e_zero, "constant_field_error": e_const,
               "step_errors": errs.tolist(), "observed_orders": orders.tolist(),
               "jacobian_defect": float(np.max(np.abs(det - 1.0))),
               "psi_residual": float(np.max(psi.residual)), "psi_lipschitz": psi.lipschitz}
    checks = {"zero_field_closed_form": e_zero <= 1e-10,
              "constant_field_closed_form": e_const <= 1e-10,
              "fourth_order": bool(np.all(np.abs(orders - 4.0) <= 0.5)),
              "volume_preserving": metrics["jacobian_defect"] <= 1e-6,
              "psi_residual": metrics["psi_residual"] <= 1e-8}
    return metrics, checks
