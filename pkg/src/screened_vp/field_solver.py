"""Screened potential solve ``-Delta U + U = rho + A(U)``, the electric field, and
the admissibility check on the nonlinearity ``A``."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NonlinearityA:
    """``A`` with its first two derivatives and the certified constant on ``|r| <= 1``."""

    kind: str
    A: object
    dA: object
    d2A: object
    limits: tuple = (0.0, 0.0, 0.0)   # values of A/r^2, A'/r, A'' at r = 0
    C_A: float = None

    def __call__(self, r):
        return self.A(r)

    @property
    def is_zero(self):
        return self.kind == "screened"


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


def screened():
    return NonlinearityA("screened", _zero, _zero, _zero, (0.0, 0.0, 0.0), 0.0)


def massless_electrons():
    """``A(r) = r + 1 - e^r``."""
    A = lambda r: -np.expm1(r) + r
    dA = lambda r: -np.expm1(r)
    d2A = lambda r: -np.exp(r)
    return NonlinearityA("massless-electrons", A, dA, d2A, (-0.5, -1.0, -1.0))


def linear_coupling():
    """``A(r) = r``; inadmissible (not ``o(r)`` at 0), kept to exercise the rejection."""
    return NonlinearityA("linear", lambda r: np.asarray(r, float), lambda r: np.ones_like(np.asarray(r, float)),
                         _zero, (np.inf, np.inf, 0.0))


def custom(A, dA, d2A, limits=None):
    if limits is None:
        eps = 1e-6
        limits = (float(A(eps) / eps ** 2), float(dA(eps) / eps), float(d2A(0.0)))
    return NonlinearityA("custom", A, dA, d2A, tuple(limits))


def tabulated(r, a, da, d2a):
    """Custom ``A`` from sampled values on ``[-1, 1]`` (cubic interpolation)."""
    from scipy.interpolate import CubicSpline
    r = np.asarray(r, float)
    fa, fda, fd2a = (CubicSpline(r, np.asarray(y, float)) for y in (a, da, d2a))
    return custom(fa, fda, fd2a)


def assumption_a_check(nl, n=10_000, blowup=1e8):
    """``C_A = sup_{|r|<=1} |A/r^2| + |A'/r| + |A''|`` by dense sampling; rejects divergence at 0."""
    if nl.is_zero:
        return 0.0
    # geometric refinement towards 0 from both sides plus a uniform cover
    pos = np.concatenate([np.geomspace(1e-8, 1.0, n // 2), np.linspace(1e-3, 1.0, n // 2)])
    r = np.concatenate([-pos[::-1], pos])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.abs(nl.A(r) / r ** 2) + np.abs(nl.dA(r) / r) + np.abs(nl.d2A(r))
        at0 = sum(abs(x) for x in nl.limits)
    if not np.all(np.isfinite(vals)) or not np.isfinite(at0) or np.max(vals) > blowup:
        raise ValueError(f"nonlinearity '{nl.kind}' is not o(r) at r = 0: A(r)/r^2 or A'(r)/r diverges")
    if abs(float(nl.A(np.array(0.0)))) > 1e-14:
        raise ValueError(f"nonlinearity '{nl.kind}' has A(0) != 0")
    return float(max(np.max(vals), at0))


def certified(nl):
    """Copy of ``nl`` carrying its checked constant."""
    from dataclasses import replace
    return replace(nl, C_A=assumption_a_check(nl))


def screened_inverse(rho, grid):
    """``(1 - Delta)^{-1} rho`` over the trailing grid axes."""
    return grid.inverse(grid.forward(rho) / (1.0 + grid.k2()))


def solve_potential(rho, grid, nl=None, rtol=1e-12, max_iter=50, return_info=False):
    """Fixed point ``U <- (1 - Delta)^{-1}(rho + A(U))`` started from the linear solve."""
    nl = nl or screened()
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise ValueError("density contains non-finite values")
    symbol = 1.0 / (1.0 + grid.k2())
    rho_hat = grid.forward(rho)
    U = grid.inverse(rho_hat * symbol)
    info = {"iterations": 0, "updates": []}
    if nl.is_zero:
        return (U, info) if return_info else U
    C_A = nl.C_A if nl.C_A is not None else assumption_a_check(nl)
    for it in range(1, max_iter + 1):
        amp = float(np.max(np.abs(U)))
        if amp > 1.0 or C_A * amp >= 0.5:
            raise ValueError(f"potential solve not certified: C_A*||U||_inf = {C_A * amp:.3g} >= 1/2")
        new = grid.inverse((rho_hat + grid.forward(nl.A(U))) * symbol)
        upd = float(np.max(np.abs(new - U)))
        U = new
        info["updates"].append(upd)
        info["iterations"] = it
        if upd <= rtol * max(float(np.max(np.abs(U))), 1e-300):
            break
    else:
        raise RuntimeError(f"potential fixed point did not converge in {max_iter} iterations")
    info["C_A_times_U"] = C_A * float(np.max(np.abs(U)))
    return (U, info) if return_info else U


def residual(U, rho, grid, nl=None):
    """``||(1 - Delta) U - rho - A(U)||_inf``."""
    nl = nl or screened()
    lhs = grid.inverse(grid.forward(U) * (1.0 + grid.k2()))
    return float(np.max(np.abs(lhs - rho - nl.A(U))))


def electric_field(U, grid):
    """``E = -grad U``, component axis in front of the grid axes."""
    return -grid.gradient(U)


def elliptic_gain_audit(battery, grid, p, kappa, shifts=None):
    """Empirical constant in ``sum_j ||grad^j (1-Delta)^{-1} psi||_p + |grad (1-Delta)^{-1} psi|_{B^kappa_p} <= c0 ||psi||_p``."""
    from .norms import besov_seminorm, lp
    ratios = []
    for psi in battery:
        den = lp(psi, grid, p).value
        if den == 0:
            continue
        u = screened_inverse(psi, grid)
        gu = grid.gradient(u)
        num = lp(u, grid, p).value + lp(gu, grid, p).value + besov_seminorm(gu, grid, kappa, p, shifts).value
        ratios.append(num / den)
    return (max(ratios) if ratios else 0.0), ratios


def smooth_battery(grid, count=5, seed=0):
    """Gaussians and random band-limited fields."""
    rng = np.random.default_rng(seed)
    x = grid.coords()
    r2 = sum(c ** 2 for c in x)
    out = [np.exp(-r2 / (2 * w ** 2)) for w in (0.5, 1.0, 2.0)]
    kk = grid.k2()
    for j in range(max(count - 3, 0)):
        noise = grid.forward(rng.standard_normal(grid.shape))
        out.append(grid.inverse(noise * np.exp(-kk / (2.0 + j))))
    return out
