"""Discrete norms: Lebesgue, Besov/Triebel difference seminorms, time-weighted
families, Hölder data functionals and the product norm on (density, potential).

The supremum over shifts is taken over a fixed, exactly reproducible set:
dyadic step counts (1, 2, 4, ... grid cells, at most ``octaves`` of them and at
most half the box) along the signed coordinate axes and the body diagonals.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .discretization import RadialGrid


@dataclass
class NormValue:
    kind: str
    value: float
    params: dict = field(default_factory=dict)
    shifts: str = ""

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class ShiftSet:
    offsets: tuple          # integer grid offsets, one tuple per shift
    lengths: tuple          # |alpha| in physical units
    descriptor: str

    def __len__(self):
        return len(self.offsets)


def directions(d, diagonals=True):
    dirs = []
    for i in range(d):
        for sgn in (1, -1):
            e = [0] * d
            e[i] = sgn
            dirs.append(tuple(e))
    if diagonals and d > 1:
        for signs in product((1, -1), repeat=d - 1):
            dirs.append((1,) + signs)
    return dirs


def shift_set(grid, octaves=8, diagonals=True, max_steps=None):
    """Dyadic grid-representable shifts along axis and diagonal directions."""
    limit = grid.n // 2 if max_steps is None else max_steps
    steps = [2 ** j for j in range(octaves) if 2 ** j <= limit]
    if not steps:
        raise ValueError("empty shift set")
    offs, lens = [], []
    for e in directions(grid.d, diagonals):
        norm = np.sqrt(sum(c * c for c in e))
        for n in steps:
            offs.append(tuple(n * c for c in e))
            lens.append(n * norm * grid.h)
    desc = f"dyadic{len(steps)}x{len(offs) // len(steps)}dir"
    return ShiftSet(tuple(offs), tuple(lens), desc)


def _roll(g, offset, d):
    axes = tuple(range(-d, 0))
    return np.roll(g, offset, axis=axes)


def _magnitude(g, d):
    """Pointwise Euclidean magnitude over any component axes in front of the grid axes."""
    g = np.asarray(g)
    if g.ndim == d:
        return np.abs(g)
    comp = tuple(range(g.ndim - d))
    return np.sqrt(np.sum(np.abs(g) ** 2, axis=comp))


def _lp_values(mag, grid, p):
    if p == np.inf or p == "inf":
        return float(np.max(mag)) if mag.size else 0.0
    if p == 1:
        return float(grid.integrate(mag))
    raise ValueError("p must be 1 or inf")


def lp(g, grid, p):
    """``||g||_{L^p}`` (p in {1, inf}); vector fields use the pointwise Euclidean norm."""
    mag = _magnitude(g, len(grid.shape))
    return NormValue("Lp", _lp_values(mag, grid, p), {"p": p})


def _difference_magnitude(g, offset, d):
    # |g(x) - g(x - alpha)| with alpha = offset * h; roll by +offset gives g(x - alpha)
    return _magnitude(np.asarray(g) - _roll(g, offset, d), d)


def besov_seminorm(g, grid, s, p, shifts=None):
    """``sup_alpha ||g - g(. - alpha)||_{L^p} / |alpha|^s`` over the shift set."""
    if isinstance(grid, RadialGrid):
        return _radial_besov(g, grid, s, p)
    shifts = shifts or shift_set(grid)
    if len(shifts) == 0:
        raise ValueError("empty shift set")
    best = 0.0
    for off, ln in zip(shifts.offsets, shifts.lengths):
        val = _lp_values(_difference_magnitude(g, off, grid.d), grid, p) / ln ** s
        best = max(best, val)
    return NormValue("Besov", best, {"s": s, "p": p}, shifts.descriptor)


def triebel_seminorm(g, grid, s, p, shifts=None):
    """``|| sup_alpha |g - g(. - alpha)| / |alpha|^s ||_{L^p}``."""
    shifts = shifts or shift_set(grid)
    if len(shifts) == 0:
        raise ValueError("empty shift set")
    acc = np.zeros(grid.shape)
    for off, ln in zip(shifts.offsets, shifts.lengths):
        np.maximum(acc, _difference_magnitude(g, off, grid.d) / ln ** s, out=acc)
    return NormValue("Triebel", _lp_values(acc, grid, p), {"s": s, "p": p}, shifts.descriptor)


def _radial_besov(g, grid, s, p, octaves=8):
    """Hölder quotient of a radial profile along a diameter (shifts collinear with x)."""
    if p not in (np.inf, "inf"):
        raise ValueError("radial profiles support the p = inf seminorm only")
    g = np.asarray(g)
    line = np.concatenate([g[..., :0:-1], g], axis=-1)
    best = 0.0
    for j in range(octaves):
        n = 2 ** j
        if n >= line.shape[-1]:
            break
        diff = np.max(np.abs(line[..., n:] - line[..., :-n]))
        best = max(best, diff / (n * grid.h) ** s)
    return NormValue("Besov", float(best), {"s": s, "p": p}, "radial-diameter")


def japanese(s):
    return np.sqrt(1.0 + np.asarray(s, dtype=float) ** 2)


def _derivatives(values, grid, order):
    """Spectral ``grad^order`` of each time slice; tensor axes after the time axis."""
    out = values
    for _ in range(order):
        if isinstance(grid, RadialGrid):
            if order > 1:
                raise ValueError("radial profiles support first derivatives only")
            return grid.inverse_derivative(grid.forward(values))
        out = grid.gradient(out)
    return out


def _weighted_parts(values, times, grid, kappa, shifts):
    d = grid.d
    js = japanese(times.t)
    lp1 = np.array([_lp_values(_magnitude(v, len(grid.shape)), grid, 1) for v in values])
    lpi = np.array([_lp_values(_magnitude(v, len(grid.shape)), grid, np.inf) for v in values])
    b1 = np.array([besov_seminorm(v, grid, kappa, 1, shifts).value for v in values])
    bi = np.array([besov_seminorm(v, grid, kappa, np.inf, shifts).value for v in values])
    return js, d, lp1, lpi, b1, bi


def time_weighted(values, times, grid, kappa, l=0, shifts=None):
    """``sum_{j<=l} || <s>^j grad^j g ||_kappa`` on the sampled times."""
    values = np.asarray(values)
    if isinstance(grid, RadialGrid):
        raise ValueError("time-weighted norms need a Cartesian grid")
    shifts = shifts or shift_set(grid)
    total = 0.0
    for j in range(l + 1):
        der = _derivatives(values, grid, j)
        js, d, lp1, lpi, b1, bi = _weighted_parts(der, times, grid, kappa, shifts)
        w = js ** j
        p1 = np.max(w * (lp1 + js ** kappa * b1))
        pinf = np.max(w * (js ** d * lpi + js ** (kappa + d) * bi))
        total += p1 + pinf
    return NormValue("TimeWeighted" if l == 0 else "HigherTimeWeighted", float(total),
                     {"kappa": kappa, "l": l}, shifts.descriptor)


def time_weighted_equivalent(values, times, grid, kappa, l=1, shifts=None):
    """Two-term form: zeroth-order Lebesgue part plus top-order Besov part."""
    values = np.asarray(values)
    shifts = shifts or shift_set(grid)
    js, d, lp1, lpi, _, _ = _weighted_parts(values, times, grid, kappa, shifts)
    der = _derivatives(values, grid, l)
    _, _, _, _, b1, bi = _weighted_parts(der, times, grid, kappa, shifts)
    p1 = np.max(lp1 + js ** (l + kappa) * b1)
    pinf = np.max(js ** d * lpi + js ** (l + kappa + d) * bi)
    return NormValue("HigherTimeWeighted", float(p1 + pinf), {"kappa": kappa, "l": l, "form": "two-term"},
                     shifts.descriptor)


def product_s_norm(rho, U, times, grid, a, eps, shifts=None):
    """``||rho||_a + eps^{1/3} ||U||_a``."""
    first = time_weighted(rho, times, grid, a, shifts=shifts).value
    second = time_weighted(U, times, grid, a, shifts=shifts).value
    return NormValue("ProductS", first + np.cbrt(eps) * second, {"a": a, "eps": eps})


def holder_quotients(h, xgrid, vgrid, a, xshifts=None, vshifts=None):
    """``D^a h = |h| + sup_z |delta^x_z h|/|z|^a + sup_w |delta^v_w h|/|w|^a`` pointwise.

    ``h`` has optional leading component axes followed by the x axes and the v axes.
    """
    h = np.asarray(h)
    dx, dv = xgrid.d, vgrid.d
    ncomp = h.ndim - dx - dv
    xshifts = xshifts or shift_set(xgrid)
    vshifts = vshifts or shift_set(vgrid)
    total = _magnitude(h, dx + dv) if ncomp else np.abs(h)
    for shifts, axes in ((xshifts, tuple(range(ncomp, ncomp + dx))),
                         (vshifts, tuple(range(ncomp + dx, ncomp + dx + dv)))):
        acc = np.zeros(h.shape[ncomp:])
        for off, ln in zip(shifts.offsets, shifts.lengths):
            diff = h - np.roll(h, off, axis=axes)
            mag = _magnitude(diff, dx + dv) if ncomp else np.abs(diff)
            np.maximum(acc, mag / ln ** a, out=acc)
        total = total + acc
    return total


def mixed_norms(F, xgrid, vgrid):
    """``sum_{p in {1, inf}} ( ||F||_{L^1_x L^p_v} + ||F||_{L^1_v L^p_x} )``."""
    dx, dv = xgrid.d, vgrid.d
    xa = tuple(range(dx))
    va = tuple(range(dx, dx + dv))
    x1v1 = float(np.sum(F) * xgrid.cell * vgrid.cell)
    x1vinf = float(np.sum(np.max(F, axis=va)) * xgrid.cell)
    v1xinf = float(np.sum(np.max(F, axis=xa)) * vgrid.cell)
    return 2 * x1v1 + x1vinf + v1xinf


def phase_gradient(f, xgrid, vgrid):
    """Spectral gradient in (x, v) of phase-space samples, components first."""
    dx = xgrid.d
    comps = []
    for grid, offset in ((xgrid, 0), (vgrid, dx)):
        axes = tuple(range(offset, offset + grid.d))
        fh = np.fft.fftn(f, axes=axes)
        for j, sym in enumerate(grid.derivative_symbols()):
            shp = [1] * f.ndim
            shp[offset:offset + grid.d] = sym.shape
            comps.append(np.fft.ifftn(fh * sym.reshape(shp), axes=axes).real)
    return np.stack(comps)


def holder_data(f, xgrid, vgrid, a, order=0, xshifts=None, vshifts=None):
    """Mixed-norm size of ``D^a (grad_{x,v}^order f)`` for phase-space samples."""
    if order not in (0, 1):
        raise ValueError("derivative order must be 0 or 1")
    h = f if order == 0 else phase_gradient(f, xgrid, vgrid)
    D = holder_quotients(h, xgrid, vgrid, a, xshifts, vshifts)
    return NormValue("HolderData", mixed_norms(D, xgrid, vgrid), {"a": a, "order": order})


def data_norm(f, xgrid, vgrid, a):
    """The full smallness functional: orders 0 and 1 summed."""
    return sum(holder_data(f, xgrid, vgrid, a, i).value for i in (0, 1))

