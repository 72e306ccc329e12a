"""Equilibrium velocity profiles and their weighted norms.

Built-in profiles are finite mixtures of isotropic Gaussians with centres on
the first velocity axis, so every derivative and the Fourier transform are
available in closed form.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np
from scipy.special import eval_hermitenorm, gamma


class EquilibriumProfile:
    """Base interface: ``mu``, ``grad``, ``fourier`` on arrays of velocities.

    Velocities are passed as arrays with the component index last.
    """

    def mu(self, v):
        raise NotImplementedError

    def grad(self, v):
        raise NotImplementedError

    def fourier(self, eta):
        raise NotImplementedError

    @property
    def is_radial(self):
        return False

    @property
    def is_zero(self):
        return False


@dataclass(frozen=True)
class GaussianMixture(EquilibriumProfile):
    """``mu(v) = sum_i w_i N(v; c_i e_1, theta_i)``."""

    d: int
    weights: tuple
    centers: tuple
    temperatures: tuple
    decay_exponent: float = np.inf
    name: str = "mixture"

    def __post_init__(self):
        if not (len(self.weights) == len(self.centers) == len(self.temperatures)):
            raise ValueError("mixture component lists differ in length")
        if any(th <= 0 for th in self.temperatures):
            raise ValueError("temperatures must be positive")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative")

    @property
    def mass(self):
        return float(sum(self.weights))

    @property
    def is_zero(self):
        return len(self.weights) == 0 or self.mass == 0.0

    @property
    def is_radial(self):
        return all(c == 0.0 for w, c in zip(self.weights, self.centers) if w != 0.0)

    def _components(self):
        return [(w, c, th) for w, c, th in zip(self.weights, self.centers, self.temperatures) if w != 0.0]

    def mu(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1])
        for w, c, th in self._components():
            r2 = np.sum(v ** 2, axis=-1) - 2 * c * v[..., 0] + c * c
            out += w * (2 * np.pi * th) ** (-self.d / 2) * np.exp(-r2 / (2 * th))
        return out

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        for w, c, th in self._components():
            shifted = v.copy()
            shifted[..., 0] -= c
            g = w * (2 * np.pi * th) ** (-self.d / 2) * np.exp(-np.sum(shifted ** 2, axis=-1) / (2 * th))
            out -= g[..., None] * shifted / th
        return out

    def fourier(self, eta):
        """``mu_hat(eta) = int exp(-i v.eta) mu(v) dv``."""
        eta = np.asarray(eta, dtype=float)
        out = np.zeros(eta.shape[:-1], dtype=complex)
        e2 = np.sum(eta ** 2, axis=-1)
        for w, c, th in self._components():
            out += w * np.exp(-th * e2 / 2 - 1j * c * eta[..., 0])
        return out

    def fourier_along(self, u, direction):
        """``mu_hat(u n)`` for scalar samples ``u`` along a unit vector ``n``."""
        u = np.asarray(u, dtype=float)
        n1 = float(direction[0])
        out = np.zeros(u.shape, dtype=complex)
        for w, c, th in self._components():
            out += w * np.exp(-th * u * u / 2 - 1j * c * n1 * u)
        return out

    def derivative(self, v, multi_index):
        """Mixed partial derivative ``d^m mu`` via Hermite polynomials."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1])
        for w, c, th in self._components():
            s = np.sqrt(th)
            term = w * (2 * np.pi * th) ** (-self.d / 2)
            for i, m in enumerate(multi_index):
                z = (v[..., i] - (c if i == 0 else 0.0)) / s
                term = term * (-1) ** m * s ** (-m) * eval_hermitenorm(m, z) * np.exp(-z * z / 2)
            out += term
        return out


def maxwellian(d, theta=1.0):
    if theta <= 0:
        raise ValueError("temperature must be positive")
    return GaussianMixture(d, (1.0,), (0.0,), (float(theta),), name="maxwellian")


def double_maxwellian(d, shift, weight=0.5, theta=1.0):
    if not 0.0 <= weight <= 1.0:
        raise ValueError("mixture weight must lie in [0, 1]")
    if theta <= 0:
        raise ValueError("temperature must be positive")
    return GaussianMixture(d, (float(weight), 1.0 - weight), (float(shift), -float(shift)),
                           (float(theta), float(theta)), name="double_maxwellian")


def zero_profile(d):
    return GaussianMixture(d, (), (), (), name="zero")


class TabulatedProfile(EquilibriumProfile):
    """User-supplied ``mu`` and ``grad`` with a numerical Fourier transform."""

    def __init__(self, d, mu, grad, vgrid, decay_exponent, radial=False, name="tabulated"):
        self.d = d
        self._mu = mu
        self._grad = grad
        self.vgrid = vgrid
        self.decay_exponent = decay_exponent
        self._radial = radial
        self.name = name
        v = np.stack(vgrid.coords(sparse=False), axis=-1)
        self._samples = mu(v)
        self._points = v.reshape(-1, d)
        self._flat = self._samples.ravel() * vgrid.weight

    @property
    def mass(self):
        return float(np.sum(self._flat))

    @property
    def is_radial(self):
        return self._radial

    def mu(self, v):
        return self._mu(np.asarray(v, dtype=float))

    def grad(self, v):
        return self._grad(np.asarray(v, dtype=float))

    def fourier(self, eta):
        eta = np.asarray(eta, dtype=float)
        flat = eta.reshape(-1, self.d)
        out = np.exp(-1j * flat @ self._points.T) @ self._flat
        return out.reshape(eta.shape[:-1])

    def fourier_along(self, u, direction):
        u = np.asarray(u, dtype=float)
        return self.fourier(u[..., None] * np.asarray(direction, dtype=float))


@dataclass
class WeightedNormReport:
    alpha: float
    beta: int
    value: float
    per_order: tuple


def _sphere_area(n):
    """Area of the unit sphere in R^n."""
    return 2 * np.pi ** (n / 2) / gamma(n / 2)


def _multi_indices(d, order):
    for m in product(range(order + 1), repeat=d):
        if sum(m) == order:
            yield m


def _multinomial(m):
    out = factorial(sum(m))
    for k in m:
        out //= factorial(k)
    return out


@lru_cache(maxsize=64)
def _axisymmetric_quadrature(d, extent, n_axial, n_radial):
    v1 = np.linspace(-extent, extent, n_axial)
    rho = np.linspace(0.0, extent, n_radial)
    w1 = np.full(n_axial, v1[1] - v1[0])
    w1[[0, -1]] *= 0.5
    wr = np.full(n_radial, rho[1] - rho[0])
    wr[[0, -1]] *= 0.5
    V1, R = np.meshgrid(v1, rho, indexing="ij")
    pts = np.zeros(V1.shape + (d,))
    pts[..., 0] = V1
    pts[..., 1] = R
    weights = np.outer(w1, wr) * _sphere_area(d - 1) * R ** (d - 2)
    return pts, weights


def derivative_magnitudes(profile, max_order, extent=None, n_axial=801, n_radial=401):
    """``|grad^j mu|`` (Frobenius) on an axisymmetric quadrature, j = 1..max_order+1.

    Returns (points, weights, list of magnitude arrays).
    """
    if not isinstance(profile, GaussianMixture):
        raise ValueError("analytic derivatives are only available for Gaussian mixtures")
    d = profile.d
    if extent is None:
        spread = max([abs(c) for c in profile.centers] + [0.0])
        theta = max(profile.temperatures + (1.0,))
        extent = spread + 12.0 * np.sqrt(theta) + 0.5 * max_order
    pts, weights = _axisymmetric_quadrature(d, float(extent), n_axial, n_radial)
    mags = []
    for order in range(1, max_order + 2):
        acc = np.zeros(pts.shape[:-1])
        if not profile.is_zero:
            for m in _multi_indices(d, order):
                acc += _multinomial(m) * profile.derivative(pts, m) ** 2
        mags.append(np.sqrt(acc))
    return pts, weights, mags


def weighted_norm(profile, alpha, beta, **quad):
    """``sum_{j<=beta} int <v>^alpha |grad^j grad mu| dv`` for a Gaussian mixture."""
    if beta < 0:
        raise ValueError("derivative order must be nonnegative")
    pts, weights, mags = derivative_magnitudes(profile, beta, **quad)
    jap = np.sqrt(1.0 + np.sum(pts ** 2, axis=-1)) ** alpha
    per = tuple(float(np.sum(weights * jap * m)) for m in mags)
    return WeightedNormReport(float(alpha), int(beta), float(sum(per)), per)


def sup_weighted(profile, N, orders=2, **quad):
    """``sum_{j<=orders} sup <v>^N |grad^j grad mu|`` (the W^{2,inf} type constant)."""
    pts, _, mags = derivative_magnitudes(profile, orders, **quad)
    jap = np.sqrt(1.0 + np.sum(pts ** 2, axis=-1)) ** N
    return float(sum(np.max(jap * m) for m in mags))


def kernel_constants(profile, gamma_order):
    """Return ``(M_bar, M_tilde)`` for the decay envelope of the resolvent kernel."""
    if gamma_order not in (0, 1):
        raise ValueError("kernel constants are computed for gamma in {0, 1} only")
    d = profile.d
    rep = weighted_norm(profile, d + gamma_order + 4, 2 * d + 2 * gamma_order + 5)
    m_bar = rep.value
    return m_bar, m_bar * (1.0 + m_bar) ** (d + gamma_order + 1)


def assumption_report(profile):
    """Equilibrium constants used to gate nonlinear runs."""
    d = profile.d
    if not profile.decay_exponent > d:
        raise ValueError(f"decay exponent {profile.decay_exponent} must exceed d = {d}")
    n = min(profile.decay_exponent, d + 5)
    return {
        "M_star": sup_weighted(profile, n, 2),
        "regularity_norm": weighted_norm(profile, d + 5, 2 * d + 7).value,
    }
