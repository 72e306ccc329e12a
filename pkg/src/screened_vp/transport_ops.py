"""Free transport, the initial-data and reaction operators, the reconstructed
distribution and the scattering profile.

Two evaluation paths are provided.  The phase-grid path advances whole
phase-space samples with a Strang split step (exact spectral free streaming in
``x``, exact spectral velocity shift by ``E(x) dt``) and a trapezoidal Duhamel
rule for sources; it yields the operators on every grid point and time node.
The pointwise path composes the RK4 characteristics with direct ``(s, v)``
quadrature and serves as an independent cross-check at selected points.

For a source ``S = sum_c F_c(s, x) eta_c(v)`` let ``q`` solve
``d_t q + v.grad_x q + E.grad_v q = S``, ``q(0) = 0`` (``q_L`` the same with
``E = 0``).  Then ``T[F, eta] = int (q_L - q) dv`` and the reaction term is
``R = T[E, grad mu]`` summed over components.
"""
from dataclasses import dataclass, field, replace

import numba
import numpy as np
import scipy.fft as sfft

from .characteristics import RadialField, as_field, _field_at, integrate_flow
from .discretization import SpaceTimeField, workers
from .fitting import DecayReport, fit_power_law
from .norms import data_norm
from .volterra import causal_convolve, linear_run


# ---------------------------------------------------------------- initial data

def _gauss(r2, sigma, d):
    return np.exp(-r2 / (2 * sigma ** 2)) / (2 * np.pi * sigma ** 2) ** (d / 2)


@dataclass(frozen=True)
class InitialData:
    """``f0(x, v)`` with amplitude ``eps``; evaluators take coordinate tuples."""

    d: int
    eps: float
    sigma_x: float
    sigma_v: float
    kind: str = "gaussian"          # gaussian | dipole

    def __call__(self, x, v):
        r2x = sum(np.asarray(c) ** 2 for c in x)
        r2v = sum(np.asarray(c) ** 2 for c in v)
        base = self.eps * _gauss(r2x, self.sigma_x, self.d) * _gauss(r2v, self.sigma_v, self.d)
        if self.kind == "dipole":
            return base * np.asarray(x[0]) / self.sigma_x
        return base

    def double_transform(self, xi, eta):
        """``int int exp(-i x.xi - i v.eta) f0 dx dv``; component axis last."""
        xi = np.asarray(xi, float)
        eta = np.asarray(eta, float)
        g = self.eps * np.exp(-self.sigma_x ** 2 * np.sum(xi ** 2, -1) / 2
                              - self.sigma_v ** 2 * np.sum(eta ** 2, -1) / 2)
        if self.kind == "dipole":
            return -1j * self.sigma_x * xi[..., 0] * g
        return g

    def scaled(self, factor):
        return replace(self, eps=self.eps * factor)

    @property
    def charge(self):
        return self.eps if self.kind == "gaussian" else 0.0

    def radial_generator(self):
        """``(gaussian data, c)`` with this density equal to ``c d/dx_1`` of the Gaussian one."""
        if self.kind == "gaussian":
            return self, None
        return replace(self, kind="gaussian"), -self.sigma_x

    def samples(self, xgrid, vgrid):
        x = tuple(c.reshape(c.shape + (1,) * vgrid.d) for c in xgrid.coords())
        v = tuple(c.reshape((1,) * xgrid.d + c.shape) for c in vgrid.coords())
        out = np.asarray(self(x, v), dtype=float)
        return np.broadcast_to(out, xgrid.shape + vgrid.shape).copy()

    def holder_norm(self, xgrid, vgrid, a):
        return data_norm(self.samples(xgrid, vgrid), xgrid, vgrid, a)


def gaussian_data(d=3, eps=1e-3, sigma_x=1.5, sigma_v=1.0):
    return InitialData(d, eps, sigma_x, sigma_v, "gaussian")


def dipole_data(d=3, eps=1e-3, sigma_x=1.5, sigma_v=1.0):
    return InitialData(d, eps, sigma_x, sigma_v, "dipole")


def smallness_gate(data, xgrid, vgrid, a, C0):
    """Check ``sum ||D^a grad^i f0|| <= eps / C0``; returns the measured functional."""
    value = data.holder_norm(xgrid, vgrid, a)
    if value > data.eps / C0 * (1 + 1e-12):
        raise ValueError(f"initial data too large: Hölder functional {value:.4g} > eps/C0 = {data.eps / C0:.4g}")
    return value


# ---------------------------------------------------------------- free transport

def free_density(data, t, xgrid, vgrid, chunk=512):
    """``int f0(x - t v, v) dv`` on the x-grid by velocity quadrature of the data evaluator."""
    x = xgrid.coords()
    vs = np.stack(np.broadcast_arrays(*vgrid.coords()), -1).reshape(-1, vgrid.d)
    out = np.zeros(xgrid.shape)
    for start in range(0, vs.shape[0], chunk):
        blk = vs[start:start + chunk]
        vv = tuple(blk[:, j].reshape((-1,) + (1,) * xgrid.d) for j in range(xgrid.d))
        xx = tuple(x[j][None] - t * vv[j] for j in range(xgrid.d))
        out += np.sum(data(xx, vv), axis=0)
    return out * vgrid.cell


def free_density_closed(data, t, x):
    """Closed form for Gaussian data: a Gaussian of variance ``sigma_x^2 + t^2 sigma_v^2``."""
    s2 = data.sigma_x ** 2 + (t * data.sigma_v) ** 2
    r2 = sum(np.asarray(c) ** 2 for c in x)
    base = data.eps * _gauss(r2, np.sqrt(s2), data.d)
    if data.kind == "dipole":
        return base * data.sigma_x * np.asarray(x[0]) / s2
    return base


def free_density_radial(data, times, rgrid):
    """Free density of radial (Gaussian) data on a radial grid, all times."""
    if data.kind != "gaussian":
        raise ValueError("radial free density needs radially symmetric data")
    xi = np.zeros((rgrid.n, 3))
    xi[:, 0] = rgrid.k
    tab = np.stack([data.double_transform(xi, t * xi).real for t in times.t])
    return rgrid.inverse(tab)


def free_decay_report(data, times, rgrid, window=None, tolerance=0.05):
    """``||rho_1(t)||_inf`` decay exponent against ``-d`` (relative tolerance)."""
    rho = free_density_radial(data, times, rgrid)
    sup = np.max(np.abs(rho), axis=-1)
    T = times.T
    window = window or (T / 8, T)
    fit = fit_power_law(times.t, sup, window)
    d = data.d
    rep = DecayReport("free_density", times.t, sup, 1.0 / (1 + times.t) ** d, fit, -d, tolerance * d)
    rep.checks = {"exponent": abs(fit.slope + d) <= tolerance * d}
    return rep


# ---------------------------------------------------------------- phase-grid engine

def _shift_phase(arg, nyquist):
    """``exp(-i arg)``, with ``cos(arg)`` on the self-conjugate Nyquist modes: the exact grid
    shift of that mode, which keeps the spectrum Hermitian."""
    out = np.exp(-1j * arg)
    np.copyto(out, np.cos(arg), where=np.broadcast_to(nyquist, out.shape))
    return out


def _nyquist_mask(length, n):
    m = np.zeros(length, dtype=bool)
    m[n // 2] = True
    return m


def _rfft_x(f, d):
    return sfft.rfftn(f, axes=tuple(range(d)), workers=workers())


def _drop_nyquist(F, d, n, first=0):
    """Zero the ``x`` Nyquist planes of a half spectrum in place (axes ``first .. first + d - 1``).

    Their content is ambiguous on an even grid: composed half-step shifts and a single shift
    disagree there, so both transport paths discard it.
    """
    if n % 2 == 0:
        for j in range(first, first + d):
            idx = [slice(None)] * F.ndim
            idx[j] = F.shape[j] - 1 if j == first + d - 1 else n // 2
            F[tuple(idx)] = 0
    return F


def _irfft_x(F, d, n):
    return sfft.irfftn(F, s=(n,) * d, axes=tuple(range(d)), workers=workers())


class PhaseEngine:
    """Strang split-step transport on a periodic ``x`` by periodic ``v`` phase grid.

    Arrays are laid out ``(x_1..x_d, v_1..v_d)``.  The state between steps is
    kept as the real-to-complex transform in ``x``.
    """

    def __init__(self, xgrid, vgrid, times):
        if not times.is_uniform:
            raise ValueError("the engine needs a uniform time grid")
        if xgrid.d != vgrid.d:
            raise ValueError("x and v grids differ in dimension")
        self.xgrid, self.vgrid, self.times = xgrid, vgrid, times
        self.d = d = xgrid.d
        self.dt = times.dt
        n, nv = xgrid.n, vgrid.n
        kx = [xgrid.k_axis] * (d - 1) + [np.pi * np.arange(n // 2 + 1) / xgrid.L]
        self._kx = kx
        self._kx_nyq = [_nyquist_mask(len(k), n) for k in kx]
        self._vx = vgrid.axis
        eta = [vgrid.k_axis] * (d - 1) + [np.pi * np.arange(nv // 2 + 1) / vgrid.L]
        self._eta = eta
        self._eta_nyq = [_nyquist_mask(len(k), nv) for k in eta]
        # free streaming over dt/2 in the (xi, v) representation
        self._half = self._stream(0.5 * self.dt)

    def _stream(self, tau):
        """Symbol of free streaming by ``tau`` on the (xi, v) representation, axis by axis."""
        d = self.d
        out = None
        for j in range(d):
            shp = [1] * (2 * d)
            shp[j] = len(self._kx[j])
            shp2 = [1] * (2 * d)
            shp2[d + j] = self.vgrid.n
            term = _shift_phase(tau * self._kx[j].reshape(shp) * self._vx.reshape(shp2),
                                self._kx_nyq[j].reshape(shp))
            out = term if out is None else out * term
        return out

    # -- elementary steps
    def free(self, F, tau):
        """Exact free streaming by ``tau`` of a state in the (xi, v) representation."""
        if tau == 0.5 * self.dt:
            return F * self._half
        return F * self._stream(tau)

    def kick(self, f, E, tau):
        """``f(x, v) -> f(x, v - tau E(x))`` for physical samples ``f``."""
        d = self.d
        vaxes = tuple(range(d, 2 * d))
        G = sfft.rfftn(f, axes=vaxes, workers=workers())
        ph = None
        for j in range(d):
            shp = (Ellipsis,) + (None,) * d
            Ej = E[j][shp]
            shp_eta = [1] * (2 * d)
            shp_eta[d + j] = len(self._eta[j])
            term = _shift_phase(tau * Ej * self._eta[j].reshape(shp_eta), self._eta_nyq[j].reshape(shp_eta))
            ph = term if ph is None else ph * term
        G *= ph
        return sfft.irfftn(G, s=(self.vgrid.n,) * d, axes=vaxes, workers=workers())

    def _source_hat(self, sources, n):
        # sum_c F_c_hat(xi) eta_c(v) as one matrix product over the component index
        Fh = np.stack([_drop_nyquist(_rfft_x(F[n], self.d), self.d, self.xgrid.n) for F, _ in sources])
        eta = np.stack([e for _, e in sources]).astype(complex)
        out = Fh.reshape(len(sources), -1).T @ eta.reshape(len(sources), -1)
        return out.reshape(Fh.shape[1:] + eta.shape[1:])

    def density_from_hat(self, F):
        d = self.d
        rho_hat = np.sum(F, axis=tuple(range(d, 2 * d))) * self.vgrid.cell
        return _irfft_x(rho_hat, d, self.xgrid.n)

    def sweep(self, E=None, f0=None, sources=(), snapshots=(), n_last=None):
        """Advance from ``t = 0``; returns densities at every node and requested phase snapshots.

        ``E``: array (nt, d, x...) or None for free streaming; ``f0``: phase samples or None;
        ``sources``: pairs ``(F (nt, x...), eta (v...))``.
        """
        d, n = self.d, self.xgrid.n
        nt = len(self.times) if n_last is None else n_last + 1
        shape = self.xgrid.shape + self.vgrid.shape
        if E is not None and not np.any(E):
            E = None
        if f0 is None:
            F = np.zeros(tuple(len(k) for k in self._kx) + self.vgrid.shape, dtype=complex)
        else:
            if f0.shape != shape:
                raise ValueError(f"initial samples have shape {f0.shape}, expected {shape}")
            F = _drop_nyquist(_rfft_x(f0, d), d, n)
        rho = np.empty((nt,) + self.xgrid.shape)
        snaps = {}
        edge = 0.0
        rho[0] = self.density_from_hat(F)
        if 0 in snapshots:
            snaps[0] = _irfft_x(F, d, n)
        src_prev = self._source_hat(sources, 0) if sources else None
        for k in range(nt - 1):
            if src_prev is not None:
                F += 0.5 * self.dt * src_prev
            F *= self._half
            if E is not None:
                f = _irfft_x(F, d, n)
                Emid = 0.5 * (E[k] + E[k + 1])
                f = self.kick(f, Emid, self.dt)
                F = _drop_nyquist(_rfft_x(f, d), d, n)
                del f
            F *= self._half
            if sources:
                src_prev = self._source_hat(sources, k + 1)
                F += 0.5 * self.dt * src_prev
            rho[k + 1] = self.density_from_hat(F)
            if k + 1 in snapshots:
                snaps[k + 1] = _irfft_x(F, d, n)
        if snaps:
            last = snaps[max(snaps)]
            edge = velocity_edge_fraction(last, d)
        return rho, snaps, {"velocity_edge_fraction": edge}

    def straighten(self, f, t):
        """``f(x + t v, v)`` from physical samples."""
        F = _rfft_x(f, self.d)
        return _irfft_x(F * self._stream(-t), self.d, self.xgrid.n)

    def linear_density(self, sources):
        """``int q_L dv`` for free streaming with the same trapezoidal source rule, mode by mode."""
        d = self.d
        out = None
        for F, eta in sources:
            Fh = _drop_nyquist(sfft.rfftn(F, axes=tuple(range(1, d + 1)), workers=workers()), d, self.xgrid.n, 1)
            D = np.stack([self._velocity_transform(eta, tau) for tau in self.times.t])
            term = causal_convolve(D, Fh, self.dt)
            out = term if out is None else out + term
        return sfft.irfftn(out, s=(self.xgrid.n,) * d, axes=tuple(range(1, d + 1)), workers=workers())

    def _velocity_transform(self, eta, tau):
        """``sum_v eta(v) exp(-i tau xi.v) cell`` on the half spectrum, axis by axis."""
        d = self.d
        T = eta.astype(complex)
        # contracting v_d, ..., v_1 in turn leaves the axes ordered (xi_d, ..., xi_1)
        for j in reversed(range(d)):
            ex = _shift_phase(tau * np.outer(self._vx, self._kx[j]), self._kx_nyq[j][None, :])
            T = np.tensordot(T, ex, axes=([j], [0]))
        return np.transpose(T, tuple(reversed(range(d)))) * self.vgrid.cell


def velocity_edge_fraction(f, d):
    """Largest ``|f|`` on the velocity-box faces relative to ``max |f|``."""
    top = float(np.max(np.abs(f)))
    if top == 0:
        return 0.0
    edge = 0.0
    for j in range(d, 2 * d):
        edge = max(edge, float(np.max(np.abs(np.take(f, 0, axis=j)))))
    return edge / top


def gradient_sources(E, profile, vgrid, sign=1.0):
    """Pairs ``(sign E_c, d_c mu)`` forming ``sign E.grad_v mu``."""
    v = np.stack(np.broadcast_arrays(*vgrid.coords()), -1)
    g = profile.grad(v)
    return [(sign * E[:, c], np.ascontiguousarray(g[..., c])) for c in range(vgrid.d)]


# ---------------------------------------------------------------- operators on the phase grid

def _field_values(E):
    return None if E is None else (E.values if isinstance(E, SpaceTimeField) else np.asarray(E))


def initial_term(h, E, engine):
    """``I_h(t, x) = int h(X_{0,t}, V_{0,t}) dv`` on the grid, all nodes."""
    rho, _, diag = engine.sweep(_field_values(E), f0=h)
    return SpaceTimeField(rho, engine.times, engine.xgrid, meta=diag)


def t_operator(sources, E, engine):
    """``T[F, eta] = int (q_L - q) dv`` for a source list of ``(F, eta)`` pairs."""
    if not sources:
        return SpaceTimeField(np.zeros((len(engine.times),) + engine.xgrid.shape), engine.times, engine.xgrid)
    Ev = _field_values(E)
    lin = engine.linear_density(sources)
    if Ev is None or not np.any(Ev):
        nl = lin
    else:
        nl, _, _ = engine.sweep(Ev, sources=sources)
    return SpaceTimeField(lin - nl, engine.times, engine.xgrid)


def reaction_term(E, profile, engine):
    """``R = sum_c T[E_c, d_c mu]``."""
    Ev = _field_values(E)
    if Ev is None:
        return t_operator((), None, engine)
    return t_operator(gradient_sources(Ev, profile, engine.vgrid), E, engine)


def combined_terms(h, E, profile, engine, snapshots=()):
    """``I + R`` in one sweep: the full perturbation ``f`` (source ``-E.grad mu``) plus the
    free-streaming correction ``int q_L dv``."""
    Ev = _field_values(E)
    src = gradient_sources(Ev, profile, engine.vgrid, sign=-1.0)
    rho_f, snaps, diag = engine.sweep(Ev, f0=h, sources=src, snapshots=snapshots)
    lin = engine.linear_density(gradient_sources(Ev, profile, engine.vgrid))
    return SpaceTimeField(rho_f + lin, engine.times, engine.xgrid, meta=diag), rho_f, snaps


# ---------------------------------------------------------------- pointwise path

@numba.njit(parallel=True, cache=True)
def _eval_points(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, tau, pts, out):
    P, d = pts.shape
    N = kax.size
    M = midx.shape[0]
    for p in numba.prange(P):
        ex_re = np.empty((d, N))
        ex_im = np.empty((d, N))
        b_re = np.empty(M)
        b_im = np.empty(M)
        e = np.empty(out.shape[1])
        _field_at(kind, re, im, midx, kax, L, d1, d2, hr, dipole, dtf, nt, tau[p], pts[p], e,
                  ex_re, ex_im, b_re, b_im)
        out[p] = e


def evaluate_field(E, tau, pts):
    """Field values at times ``tau`` (per point) and positions ``pts``."""
    fld = as_field(E)
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
    tau = np.ascontiguousarray(np.broadcast_to(np.asarray(tau, float), pts.shape[:1]))
    ncomp = fld.re.shape[1] if hasattr(fld, "re") else 3
    out = np.empty((pts.shape[0], ncomp))
    dtf = fld.times.dt if len(fld.times) > 1 else 1.0
    _eval_points(fld.kind, *fld.args()[:9], float(dtf), len(fld.times), tau, pts, out)
    return out


def scalar_as_field(F, times, grid):
    """A scalar space-time field wrapped as a one-component vector field for interpolation."""
    return SpaceTimeField(np.asarray(F)[:, None].repeat(grid.d, axis=1), times, grid, vector=True)


def _vgrid_points(vgrid):
    return np.stack(np.broadcast_arrays(*vgrid.coords()), -1).reshape(-1, vgrid.d)


def initial_term_points(h, E, t, xpts, vgrid, substeps=1):
    """Pointwise ``I_h(t, x)`` by composing ``h`` with the flow and summing over the v-grid."""
    vs = _vgrid_points(vgrid)
    out = []
    excluded = 0.0
    for x in np.atleast_2d(xpts):
        flow = integrate_flow(E, t, np.broadcast_to(x, vs.shape), vs, substeps, vmax=vgrid.L)
        X0, V0 = flow.X[0], flow.V[0]
        vals = h(tuple(X0[:, j] for j in range(vgrid.d)), tuple(V0[:, j] for j in range(vgrid.d)))
        excluded += float(np.sum(np.abs(vals[flow.mask])) * vgrid.cell)
        vals = np.where(flow.mask, 0.0, vals)
        out.append(np.sum(vals) * vgrid.cell)
    return np.array(out), excluded


def t_operator_points(F, eta, E, t, xpts, vgrid, grid, substeps=1):
    """Pointwise ``T[F, eta](t, x)`` by trapezoidal ``s``-quadrature over the field's nodes.

    ``F``: scalar samples (nt, x...); ``eta``: callable on velocity arrays (component last).
    """
    fld = as_field(E)
    times = fld.times
    Ff = as_field(scalar_as_field(F, times, grid))
    vs = _vgrid_points(vgrid)
    n_t = int(round(t / times.dt))
    s = times.t[: n_t + 1]
    w = np.full(n_t + 1, times.dt)
    w[0] = w[-1] = 0.5 * times.dt
    out = []
    for x in np.atleast_2d(xpts):
        flow = integrate_flow(fld, t, np.broadcast_to(x, vs.shape), vs, substeps)
        acc = 0.0
        for n in range(n_t + 1):
            free_pos = x[None] - (t - s[n]) * vs
            lin = evaluate_field(Ff, s[n], free_pos)[:, 0] * eta(vs)
            nl = evaluate_field(Ff, s[n], flow.X[n])[:, 0] * eta(flow.V[n])
            acc += w[n] * np.sum(lin - nl)
        out.append(acc * vgrid.cell)
    return np.array(out)


def reconstruct_f(f0, profile, E, t, x, v, substeps=1):
    """``f(t, x, v) = f0(X_0, V_0) - int_0^t E(s, X_s).grad mu(V_s) ds`` (trapezoid over nodes)."""
    fld = as_field(E)
    flow = integrate_flow(fld, t, x, v, substeps)
    d = flow.X.shape[-1]
    X0, V0 = flow.X[0], flow.V[0]
    first = f0(tuple(X0[:, j] for j in range(d)), tuple(V0[:, j] for j in range(d)))
    if t == 0:
        return first
    dt = fld.times.dt
    n_t = int(round(t / dt))
    acc = np.zeros(X0.shape[0])
    for n in range(n_t + 1):
        wgt = dt * (0.5 if n in (0, n_t) else 1.0)
        En = evaluate_field(fld, fld.times.t[n], flow.X[n])
        acc += wgt * np.sum(En * profile.grad(flow.V[n]), axis=-1)
    return first - acc


# ---------------------------------------------------------------- scattering

@dataclass
class ScatteringReport:
    t: np.ndarray
    cauchy: np.ndarray
    fit: object
    target_slope: float
    tolerance: float
    y_inf: float
    w_inf: float
    profile: np.ndarray
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())


def linear_field(profile, data, times, rgrid):
    """Linear-regime field ``E = -grad (1 - Delta)^{-1} rho_lin`` for radial or dipole data on a
    radial grid; dipole data reuse the Gaussian run since the linear problem commutes with ``d/dx_1``."""
    gen, c = data.radial_generator()
    run = linear_run(profile, gen, times, rgrid)
    uhat = run.density_hat / (1.0 + rgrid.k2())
    if c is not None:
        uhat = c * uhat
    return RadialField.from_transform(times, rgrid, uhat, dipole=c is not None), run


def straightened_f(f0, profile, E, t, w, v, substeps=1):
    """``f(t, w + t v, v)`` and ``(Y_{0,t}, W_{0,t})`` at foot points ``(w, v)``.

    Uses ``int_0^t E(s, X_s).grad mu(V_s) ds = mu(v) - mu(V_0)`` along the flow.
    """
    w = np.atleast_2d(w)
    v = np.atleast_2d(v)
    d = w.shape[1]
    if as_field(E).zero:
        # free flow: the foot point is w itself, without the rounding of (w + t v) - t v
        w, v = np.broadcast_arrays(w, v)
        return f0(tuple(w[:, j] for j in range(d)), tuple(v[:, j] for j in range(d))), 0.0 * w, 0.0 * v
    flow = integrate_flow(E, t, w + t * v, v, substeps)
    X0, V0 = flow.X[0], flow.V[0]
    f = f0(tuple(X0[:, j] for j in range(d)), tuple(V0[:, j] for j in range(d)))
    f = f + profile.mu(V0) - profile.mu(v)
    return f, X0 - w, V0 - v


def scattering_profile(f0, profile, E, ladder, w, v, a, substeps=1, slope_tol=0.3):
    """``f(t, x + t v, v)`` along an increasing ladder of node times; Cauchy differences,
    their power-law slope against ``-(d + a - 1)``, and ``f_inf`` with ``(Y_inf, W_inf)``
    extrapolated from the last two horizons."""
    vals, Ys, Ws = [], [], []
    for t in ladder:
        f, Y, W = straightened_f(f0, profile, E, t, w, v, substeps)
        vals.append(f)
        Ys.append(Y)
        Ws.append(W)
    ladder = np.asarray(ladder, float)
    diffs = np.array([np.max(np.abs(vals[k + 1] - vals[k])) for k in range(len(vals) - 1)])
    d = np.atleast_2d(w).shape[1]
    target = -(d + a - 1)
    checks = {}
    fit = None
    if np.all(diffs == 0):
        checks["cauchy"] = True
    else:
        fit = fit_power_law(ladder[1:], diffs)
        checks["cauchy_slope"] = fit.slope <= target + slope_tol
    if fit is not None and fit.slope < 0:
        q = (ladder[-2] / ladder[-1]) ** (-fit.slope)
        extrap = lambda A: A[-1] + (A[-1] - A[-2]) * q / (1 - q)
    else:
        extrap = lambda A: A[-1]
    Yinf, Winf = extrap(Ys), extrap(Ws)
    X0 = np.atleast_2d(w) + Yinf
    V0 = np.atleast_2d(v) + Winf
    finf = f0(tuple(X0[:, j] for j in range(d)), tuple(V0[:, j] for j in range(d))) \
        + profile.mu(V0) - profile.mu(np.atleast_2d(v))
    return ScatteringReport(ladder, diffs, fit, target, slope_tol, float(np.max(np.abs(Yinf))),
                            float(np.max(np.abs(Winf))), finf, checks)
