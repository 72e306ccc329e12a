"""Dielectric symbol of the screened linearised problem and the stability margin.

With ``xi = r n`` (``|n| = 1``) the substitution ``u = t r`` gives

    Ktilde(tau, r n) = -Phi_n(tau / r) / (1 + r^2),
    Phi_n(w) = int_0^inf exp(-i w u) u mu_hat(u n) du,

so one oscillatory integral per direction and frequency ratio serves every
wave number.  The margin is ``inf |1 - Ktilde|``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

_GL_ORDER = 16
_GL_X, _GL_W = leggauss(_GL_ORDER)


def _components(profile):
    if profile.is_zero:
        return []
    try:
        return profile._components()
    except AttributeError as exc:
        raise ValueError("profile provides no Gaussian envelope for the truncation certificate") from exc


def cutoff(profile, tol=1e-14):
    """Truncation point ``U`` with ``int_U^inf u |mu_hat(u n)| du <= tol``."""
    comps = _components(profile)
    if not comps:
        return 0.0
    U = 1.0
    while sum(w * np.exp(-th * U * U / 2) / th for w, _, th in comps) > tol:
        U *= 1.1
    return U


def symbol_bounds(profile):
    """``(M1, M2)`` with ``|Phi| <= M1`` and ``|Phi(w)| <= M2 / |w|``."""
    comps = _components(profile)
    m1 = sum(w / th for w, _, th in comps)
    m2 = sum(w * (2 * np.sqrt(np.pi / (2 * th)) + abs(c) / th) for w, c, th in comps)
    return float(m1), float(m2)


def panel_rule(omega_max, U):
    """Composite Gauss-Legendre nodes on ``[0, U]`` resolving ``exp(-i w u)`` for ``|w| <= omega_max``."""
    if U <= 0:
        return np.zeros(0), np.zeros(0)
    length = min(np.pi / max(abs(omega_max), 1.0), 1.0)
    n = int(np.ceil(U / length))
    edges = np.linspace(0.0, U, n + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return u, w


def phi(omega, direction, profile, tol=1e-14, chunk=256):
    """``Phi_n(w)`` for an array of frequency ratios along one direction."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.zeros(omega.shape, dtype=complex)
    if profile.is_zero:
        return out
    U = cutoff(profile, tol)
    flat = omega.ravel()
    res = out.ravel()
    order = np.argsort(np.abs(flat))
    for start in range(0, flat.size, chunk):
        idx = order[start:start + chunk]
        u, w = panel_rule(np.max(np.abs(flat[idx])), U)
        g = w * u * profile.fourier_along(u, direction)
        res[idx] = np.exp(-1j * np.outer(flat[idx], u)) @ g
    return res.reshape(omega.shape)


def khat_t(t, xi, profile):
    """Mode-wise kernel ``-t |xi|^2 mu_hat(t xi) / (1 + |xi|^2)``."""
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(xi ** 2, axis=-1)
    if profile.is_zero:
        return np.zeros(np.broadcast_shapes(t.shape, r2.shape), dtype=complex)
    return -t * r2 * profile.fourier(t[..., None] * xi) / (1.0 + r2)


def ktilde(tau, xi, profile, tol=1e-14):
    """Time-Fourier transform of ``khat_t`` over ``t >= 0`` at one ``(tau, xi)``."""
    xi = np.asarray(xi, dtype=float)
    r = float(np.sqrt(np.sum(xi ** 2)))
    if r == 0.0 or profile.is_zero:
        return 0j
    val = phi(np.array([tau / r]), xi / r, profile, tol)[0]
    return complex(-val / (1.0 + r * r))


def fibonacci_directions(n):
    """Nearly uniform unit vectors on the 2-sphere plus the coordinate axes."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    ang = np.pi * (1.0 + 5 ** 0.5) * i
    pts = np.stack([z, rho * np.cos(ang), rho * np.sin(ang)], axis=-1)
    return np.concatenate([np.eye(3), -np.eye(3), pts])


@dataclass
class PenroseReport:
    omega_max: float
    xi_min: float
    xi_max: float
    n_omega: int
    n_xi: int
    scan_margin: float
    margin: float
    tau_star: float
    xi_star: float
    omega_star: float
    tail_bound: float
    certified_margin: float
    threshold: float
    stable: bool
    n_directions: int = 1
    notes: list = field(default_factory=list)

    def as_record(self):
        return {k: v for k, v in self.__dict__.items() if k != "notes"}


def _closest_approach(p):
    """``min_{0<=s<=1} |1 + s p|`` and the minimiser, elementwise."""
    a, b = p.real, p.imag
    n2 = a * a + b * b
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(n2 > 0, -a / n2, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return np.abs(1.0 + s * p), s


def penrose_margin(profile, omega_max=60.0, xi_min=1e-3, xi_max=1e3, n_omega=1201, n_xi=241,
                   threshold=0.05, n_directions=64, tol=1e-14):
    """Scan ``|1 - Ktilde|`` over frequency ratio and wave number, refine, and certify tails.

    The scan runs on ``w = tau/|xi|`` (uniform in ``[-omega_max, omega_max]``) and
    ``|xi|`` (geometric in ``[xi_min, xi_max]``).  Refinement minimises exactly over
    ``|xi|`` at fixed ``w`` (the symbol is affine in ``1/(1+|xi|^2)``) and then
    over ``w`` with a bounded scalar search.
    """
    notes = []
    d = profile.d
    if profile.is_zero:
        return PenroseReport(omega_max, xi_min, xi_max, n_omega, n_xi, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0,
                             threshold, 1.0 >= threshold, 0, notes)
    if profile.is_radial:
        dirs = np.eye(d)[:1]
    else:
        if d != 3:
            raise ValueError("direction scan is implemented for d = 3")
        warnings.warn(f"non-radial profile: scanning {n_directions + 6} directions", RuntimeWarning)
        dirs = fibonacci_directions(n_directions)
        notes.append("direction scan")
    omegas = np.linspace(-omega_max, omega_max, n_omega)
    radii = np.geomspace(xi_min, xi_max, n_xi)
    scale = 1.0 / (1.0 + radii ** 2)

    best = (np.inf, 0.0, 0.0, None)
    scan_min = np.inf
    for n in dirs:
        p = phi(omegas, n, profile, tol)
        grid = np.abs(1.0 + scale[None, :] * p[:, None])
        i, j = np.unravel_index(np.argmin(grid), grid.shape)
        scan_min = min(scan_min, grid[i, j])
        exact, _ = _closest_approach(p)
        k = int(np.argmin(exact))
        if exact[k] < best[0]:
            best = (exact[k], omegas[k], None, n)

    # refine the frequency ratio around the best grid point
    n = best[3]
    dw = omegas[1] - omegas[0]

    def objective(w):
        return float(_closest_approach(phi(np.array([w]), n, profile, tol))[0][0])

    res = minimize_scalar(objective, bounds=(best[1] - dw, best[1] + dw), method="bounded",
                          options={"xatol": 1e-10})
    w_star = res.x if res.fun < best[0] else best[1]
    p_star = phi(np.array([w_star]), n, profile, tol)
    m_star, s_star = _closest_approach(p_star)
    margin = float(min(m_star[0], best[0]))
    r_star = float(np.sqrt(1.0 / s_star[0] - 1.0)) if s_star[0] > 0 else np.inf
    if r_star == np.inf:
        notes.append("minimum approached as |xi| -> infinity")

    m1, m2 = symbol_bounds(profile)
    tail = min(1.0 - m2 / omega_max, 1.0 - m1 / (1.0 + xi_max ** 2))
    tail = max(tail, 0.0)
    certified = min(margin, tail)
    return PenroseReport(omega_max, xi_min, xi_max, n_omega, n_xi, float(scan_min), margin,
                         float(w_star * r_star) if np.isfinite(r_star) else np.inf, r_star, float(w_star), tail,
                         certified, threshold, bool(certified >= threshold),
                         len(dirs), notes)
