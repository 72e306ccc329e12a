"""Periodic grids, spectral transforms and velocity quadrature.

Fourier convention: ``g_hat(k) = int exp(-i x.k) g(x) dx`` approximated on the
box ``[-L, L)^d`` by the rectangle rule, and the inverse
``g(x) = vol^{-1} sum_k g_hat(k) exp(i k.x)``.  With this scaling the discrete
transform of a well-resolved, well-contained function agrees with the
continuous transform on the dual grid.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

_WORKERS = 1


def set_threads(n):
    """Set the worker count used by FFTs and numba kernels."""
    global _WORKERS
    _WORKERS = max(1, int(n))
    try:
        import numba
        numba.set_num_threads(min(_WORKERS, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


def workers():
    return _WORKERS


class PeriodicGrid:
    """Uniform periodic grid on ``[-L, L)^d`` with ``n`` points per axis."""

    def __init__(self, d, L, n):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if n < 2 or n % 2:
            raise ValueError(f"points per axis must be even, got {n}")
        if L <= 0:
            raise ValueError("half-width must be positive")
        self.d = int(d)
        self.L = float(L)
        self.n = int(n)
        self.h = 2.0 * self.L / self.n
        self.axis = -self.L + self.h * np.arange(self.n)
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        self.modes = m.astype(int)
        self.k_axis = np.pi * m / self.L
        self._sign = np.where(self.modes % 2 == 0, 1.0, -1.0)

    def __eq__(self, other):
        return (type(self) is type(other) and self.d == other.d
                and self.L == other.L and self.n == other.n)

    def __hash__(self):
        return hash((type(self).__name__, self.d, self.L, self.n))

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, L={self.L}, n={self.n})"

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n ** self.d

    @property
    def cell(self):
        return self.h ** self.d

    @property
    def volume(self):
        return (2.0 * self.L) ** self.d

    def coords(self, sparse=True):
        """Coordinate arrays, broadcastable (``sparse``) or full."""
        return np.meshgrid(*([self.axis] * self.d), indexing="ij", sparse=sparse)

    def wavevectors(self, sparse=True):
        return np.meshgrid(*([self.k_axis] * self.d), indexing="ij", sparse=sparse)

    def k2(self):
        ks = self.wavevectors()
        return sum(k ** 2 for k in ks)

    def derivative_symbols(self):
        """``i k_j`` with the Nyquist entry removed, one array per axis."""
        out = []
        for j, k in enumerate(self.wavevectors()):
            kk = k.copy()
            kk[np.broadcast_to(np.abs(self.modes.reshape(k.shape)) == self.n // 2, k.shape)] = 0.0
            out.append(1j * kk)
        return out

    def _phase(self):
        s = np.ones(self.shape)
        for j in range(self.d):
            shp = [1] * self.d
            shp[j] = self.n
            s = s * self._sign.reshape(shp)
        return s

    def _axes(self):
        return tuple(range(-self.d, 0))

    def forward(self, g):
        """Continuous-convention transform over the trailing ``d`` axes."""
        g = np.asarray(g)
        if g.shape[-self.d:] != self.shape:
            raise ValueError(f"array shape {g.shape} does not end with grid shape {self.shape}")
        return self.cell * self._phase() * sfft.fftn(g, axes=self._axes(), workers=_WORKERS)

    def inverse(self, ghat, real=True):
        ghat = np.asarray(ghat)
        if ghat.shape[-self.d:] != self.shape:
            raise ValueError(f"array shape {ghat.shape} does not end with grid shape {self.shape}")
        g = sfft.ifftn(ghat * self._phase(), axes=self._axes(), workers=_WORKERS) / self.cell
        return g.real if real else g

    def integrate(self, g):
        """Rectangle-rule integral over the trailing ``d`` axes."""
        return np.sum(g, axis=self._axes()) * self.cell

    def gradient(self, g):
        """Spectral gradient of real samples, stacked on a new axis before the grid axes."""
        ghat = self.forward(g)
        return np.stack([self.inverse(s * ghat) for s in self.derivative_symbols()], axis=-self.d - 1)


class SpatialGrid(PeriodicGrid):
    pass


class VelocityGrid(PeriodicGrid):
    """Velocity box with rectangle (periodic trapezoid) weights."""

    @property
    def weight(self):
        return self.cell

    def gaussian_tail(self, sigma=1.0):
        """Mass of a centred Gaussian of width ``sigma`` outside the box."""
        from scipy.special import erfc
        one = erfc(self.L / (np.sqrt(2.0) * sigma))
        return 1.0 - (1.0 - one) ** self.d


def integrate_velocity(phase_values, vgrid):
    """Sum over the trailing velocity axes with quadrature weights."""
    f = np.asarray(phase_values)
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite phase-space values")
    return vgrid.integrate(f)


class RadialGrid:
    """Radial profiles ``g(|x|)`` in three dimensions.

    Samples sit at ``r_j = j*h`` on ``[0, R)`` and the three-dimensional
    transform ``g_hat(k) = (4 pi / k) int r g(r) sin(k r) dr`` is evaluated on
    ``k_m = m*pi/R`` with a type-I sine transform.  Used where a Cartesian box
    cannot hold both the small-time scales and the large-time spreading.
    """

    d = 3

    def __init__(self, R, n):
        if n < 4:
            raise ValueError("radial grid needs at least 4 points")
        self.R = float(R)
        self.n = int(n)
        self.h = self.R / self.n
        self.r = self.h * np.arange(self.n)
        self.dk = np.pi / self.R
        self.k = self.dk * np.arange(self.n)

    def __repr__(self):
        return f"RadialGrid(R={self.R}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and (self.R, self.n) == (other.R, other.n)

    def __hash__(self):
        return hash(("radial", self.R, self.n))

    @property
    def shape(self):
        return (self.n,)

    def forward(self, g):
        g = np.asarray(g)
        rg = g[..., 1:] * self.r[1:]
        s = sfft.dst(rg, type=1, axis=-1, workers=_WORKERS) / 2.0
        out = np.empty(g.shape, dtype=float)
        out[..., 1:] = 4.0 * np.pi * self.h * s / self.k[1:]
        out[..., 0] = 4.0 * np.pi * self.h * np.sum(g * self.r ** 2, axis=-1)
        return out

    def inverse(self, ghat):
        ghat = np.asarray(ghat)
        kg = ghat[..., 1:] * self.k[1:]
        s = sfft.dst(kg, type=1, axis=-1, workers=_WORKERS) / 2.0
        out = np.empty(ghat.shape, dtype=float)
        out[..., 1:] = self.dk * s / (2.0 * np.pi ** 2 * self.r[1:])
        out[..., 0] = self.dk * np.sum(ghat * self.k ** 2, axis=-1) / (2.0 * np.pi ** 2)
        return out

    def inverse_derivative(self, ghat):
        """Radial derivative ``g'(r)`` from the transform."""
        ghat = np.asarray(ghat)
        kg = ghat * self.k
        # sum_m k_m ghat_m [k_m cos(k_m r) / r - sin(k_m r) / r^2]
        c = np.zeros(ghat.shape[:-1] + (self.n + 1,))
        c[..., : self.n] = kg * self.k
        # type-I cosine transform with the k_0 entry zero (k_0 = 0)
        cos_sum = sfft.dct(c, type=1, axis=-1, workers=_WORKERS)[..., : self.n] / 2.0
        sin_sum = np.zeros(ghat.shape)
        sin_sum[..., 1:] = sfft.dst(kg[..., 1:], type=1, axis=-1, workers=_WORKERS) / 2.0
        out = np.zeros(ghat.shape)
        r = self.r[1:]
        out[..., 1:] = self.dk * (cos_sum[..., 1:] / r - sin_sum[..., 1:] / r ** 2) / (2.0 * np.pi ** 2)
        return out

    def integrate(self, g):
        return 4.0 * np.pi * self.h * np.sum(np.asarray(g) * self.r ** 2, axis=-1)

    def wavevectors(self):
        """Radial frequencies placed along the first axis."""
        return (self.k,) + (np.zeros_like(self.k),) * 2

    def k2(self):
        return self.k ** 2


class TimeGrid:
    """Strictly increasing sample times starting at 0."""

    def __init__(self, times):
        t = np.asarray(times, dtype=float)
        if t.ndim != 1 or t.size < 1 or t[0] != 0.0:
            raise ValueError("time grid must be 1-d and start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        self.t = t

    @classmethod
    def uniform(cls, T, m):
        return cls(np.linspace(0.0, T, int(m) + 1))

    @classmethod
    def geometric(cls, t_first, T, per_octave=4):
        n = int(np.ceil(np.log2(T / t_first) * per_octave))
        return cls(np.concatenate([[0.0], t_first * (T / t_first) ** (np.arange(n + 1) / n)]))

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.t, other.t)

    def __hash__(self):
        return hash(self.t.tobytes())

    @property
    def T(self):
        return float(self.t[-1])

    @property
    def is_uniform(self):
        d = np.diff(self.t)
        return d.size == 0 or np.allclose(d, d[0], rtol=1e-12, atol=0)

    @property
    def dt(self):
        if not self.is_uniform:
            raise ValueError("time grid is not uniform")
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0


@dataclass
class SpaceTimeField:
    """Samples indexed (time, [component,] space)."""

    values: np.ndarray
    times: TimeGrid
    grid: object
    vector: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        expect = (len(self.times),) + ((self.grid.d,) if self.vector else ()) + self.grid.shape
        if v.shape != expect:
            raise ValueError(f"field shape {v.shape} inconsistent with grids {expect}")
        self.values = v

    @property
    def is_real(self):
        return not np.iscomplexobj(self.values)

    def __getitem__(self, n):
        return self.values[n]

    def replace(self, values, vector=None):
        return SpaceTimeField(values, self.times, self.grid,
                              self.vector if vector is None else vector, dict(self.meta))


def sample(fn, grid, times=None):
    """Evaluate ``fn(*x)`` (or ``fn(t, *x)`` when ``times`` is given) exactly on grid points."""
    x = grid.coords() if isinstance(grid, PeriodicGrid) else (grid.r,)
    if times is None:
        vals = np.broadcast_to(np.asarray(fn(*x), dtype=float), grid.shape).copy()
    else:
        vals = np.stack([np.broadcast_to(np.asarray(fn(t, *x), dtype=float), grid.shape)
                         for t in times.t])
    bad = ~np.isfinite(vals)
    if bad.any():
        loc = np.argwhere(bad)[0]
        raise ValueError(f"non-finite sample at index {tuple(int(i) for i in loc)}")
    if times is None:
        return vals
    return SpaceTimeField(vals, times, grid)
