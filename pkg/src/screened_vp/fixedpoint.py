"""Picard iteration of the density/potential map and the proximity audit.

The map sends ``(rho, U)`` to ``(G * (I + R + A(U)) + I + R, (1 - Delta)^{-1}(rho + A(U)))``
where ``I + R`` is evaluated with the field ``E = -grad U`` on the phase grid.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from . import field_solver as fs
from .discretization import SpaceTimeField
from .equilibria import assumption_report
from .kernel import build_ghat, check_cancellation, convolve
from .norms import shift_set, time_weighted
from .transport_ops import PhaseEngine, combined_terms, initial_term


@dataclass
class IterationState:
    k: int
    diff: float            # ||(rho_k - rho_{k-1}, U_k - U_{k-1})||_S
    ratio: float           # diff_k / diff_{k-1}
    norm: float            # ||(rho_k, U_k)||_S
    wall: float
    edge: float = 0.0


@dataclass
class PicardResult:
    rho: np.ndarray
    U: np.ndarray
    states: list
    converged: bool
    tol: float
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.states)

    @property
    def ratios(self):
        return np.array([s.ratio for s in self.states])

    @property
    def two_step_ratios(self):
        """``sqrt(diff_k / diff_{k-2})``: the map's first component sees ``U`` only and the
        second sees ``rho`` only, so differences contract along two interleaved chains."""
        d = np.array([s.diff for s in self.states])
        out = np.full(d.size, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[2:] = np.sqrt(d[2:] / d[:-2])
        return out


class NonlinearProblem:
    """All fixed ingredients of one nonlinear run: grids, profile, data, kernel, engine."""

    def __init__(self, profile, data, xgrid, vgrid, times, nl=None, a=0.75, eps_norm=None,
                 C0=None, check_profile=True):
        self.profile = profile
        self.data = data
        self.xgrid, self.vgrid, self.times = xgrid, vgrid, times
        self.nl = fs.certified(nl or fs.screened())
        self.a = float(a)
        self.eps_norm = float(eps_norm if eps_norm is not None else data.eps)
        self.meta = {}
        if check_profile and not profile.is_zero:
            self.meta["assumptions"] = assumption_report(profile)
        if C0 is not None:
            from .transport_ops import smallness_gate
            self.meta["data_functional"] = smallness_gate(data, xgrid, vgrid, self.a, C0)
        self.shifts = shift_set(xgrid)
        self.tables = build_ghat(profile, times, xgrid)
        self.meta["cancellation"] = check_cancellation(self.tables)
        self.engine = PhaseEngine(xgrid, vgrid, times)
        self.f0 = data.samples(xgrid, vgrid)
        rho1 = initial_term(self.f0, None, self.engine)
        self.rho1 = rho1.values
        # iteration start: the free density with its own potential (the free pair has U = 0)
        self.U_start = fs.solve_potential(self.rho1, xgrid, self.nl)
        self.meta["velocity_edge_fraction"] = rho1.meta.get("velocity_edge_fraction", 0.0)

    # -- norms
    def norm(self, g):
        return time_weighted(g, self.times, self.xgrid, self.a, shifts=self.shifts).value

    def s_norm(self, rho, U):
        return self.norm(rho) + np.cbrt(self.eps_norm) * self.norm(U)

    # -- the map
    def electric_field(self, U):
        return fs.electric_field(U, self.xgrid)

    def apply_F(self, rho, U, snapshots=()):
        """One application of the map; returns ``(rho_new, U_new, info)``."""
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(U))):
            raise FloatingPointError("non-finite iterate")
        E = self.electric_field(U)
        ir, rho_f, snaps = combined_terms(self.f0, E, self.profile, self.engine, snapshots)
        AU = self.nl.A(U)
        src = SpaceTimeField(ir.values + AU, self.times, self.xgrid)
        rho_new = convolve(self.tables, src).values + ir.values
        U_new = fs.screened_inverse(rho + AU, self.xgrid)
        if not (np.all(np.isfinite(rho_new)) and np.all(np.isfinite(U_new))):
            raise FloatingPointError("map produced non-finite values")
        info = {"velocity_edge_fraction": ir.meta.get("velocity_edge_fraction", 0.0),
                "I_plus_R": ir.values, "density_of_f": rho_f, "snapshots": snaps}
        return rho_new, U_new, info

    def start(self):
        """Iteration start ``(rho_1, (1 - Delta)^{-1} rho_1)``; one map application from the
        free pair ``(rho_1, 0)`` lands close to it."""
        return self.rho1.copy(), self.U_start.copy()

    def free_pair(self):
        return self.rho1.copy(), np.zeros_like(self.rho1)

    def first_step_gap(self):
        """``||F_1(rho_1, 0) - rho_1||_a / ||rho_1||_a``."""
        rho, _, _ = self.apply_F(*self.free_pair())
        return self.norm(rho - self.rho1) / self.norm(self.rho1)


def picard(problem, max_iter=8, tol=1e-8, start=None, log=None):
    """Iterate the map until ``||difference||_S <= tol * eps`` or ``max_iter`` applications."""
    rho, U = start if start is not None else problem.start()
    states = []
    prev = None
    target = tol * problem.data.eps
    converged = False
    diverged = False
    above = 0
    for k in range(1, max_iter + 1):
        t0 = time.time()
        rho_new, U_new, info = problem.apply_F(rho, U)
        diff = problem.s_norm(rho_new - rho, U_new - U)
        norm = problem.s_norm(rho_new, U_new)
        ratio = diff / prev if prev else np.nan
        st = IterationState(k, diff, ratio, norm, time.time() - t0, info["velocity_edge_fraction"])
        states.append(st)
        if log:
            log(st)
        rho, U, prev = rho_new, U_new, diff
        if diff <= target:
            converged = True
            break
        above = above + 1 if ratio > 1 else 0
        if above >= 2:
            # two consecutive expanding steps: data too large or grid too coarse
            diverged = True
            break
    return PicardResult(rho, U, states, converged, target,
                        {"eps": problem.data.eps, "eps_norm": problem.eps_norm, "diverged": diverged})


def mean_defect(problem, rho):
    """Largest relative gap between the spatial means of ``rho`` and ``rho_1`` over time."""
    axes = tuple(range(1, rho.ndim))
    m, m1 = rho.mean(axis=axes), problem.rho1.mean(axis=axes)
    return float(np.max(np.abs(m - m1)) / max(np.max(np.abs(m1)), 1e-300))


def write_log(result, path):
    """Iteration log as CSV: n, state norm, difference norm, ratio, wall time."""
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "norm", "diff", "ratio", "wall"])
        for s in result.states:
            w.writerow([s.k, repr(s.norm), repr(s.diff), repr(s.ratio), f"{s.wall:.3f}"])


def contraction_ok(result, from_step=2, bound=0.5):
    r = result.ratios[from_step - 1:]
    r = r[np.isfinite(r)]
    return bool(r.size == 0 or np.all(r <= bound))


@dataclass
class ProximityReport:
    eps: tuple
    distance: tuple          # ||rho - rho_1||_a
    size: tuple              # ||rho||_a
    potential_distance: tuple  # ||U||_a, the free pair having zero potential
    linear_distance: tuple   # ||rho - rho_lin||_a, rho_lin = rho_1 + G * rho_1 (the map applied to the free pair)
    distance_exponent: float
    size_exponent: float
    linear_exponent: float
    combined_exponent: float   # of ||rho - rho_1||_a + eps_norm^{1/3} ||U||_a
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())


def _exponent(eps, vals):
    return float(np.log(vals[0] / vals[1]) / np.log(eps[0] / eps[1]))


def proximity_audit(problems, results, min_exponent=1.18, size_window=(0.9, 1.1)):
    """Scaling of ``||rho - rho_1||_a`` and ``||rho||_a`` across the run amplitudes."""
    eps, dist, size, lin, pot, comb = [], [], [], [], [], []
    for pb, res in zip(problems, results):
        if not res.converged:
            raise ValueError(f"proximity audit needs converged runs (eps = {pb.data.eps:g} did not converge)")
        eps.append(pb.data.eps)
        dist.append(pb.norm(res.rho - pb.rho1))
        pot.append(pb.norm(res.U))
        comb.append(dist[-1] + np.cbrt(pb.eps_norm) * pot[-1])
        size.append(pb.norm(res.rho))
        rho_lin, _, _ = pb.apply_F(*pb.free_pair())
        lin.append(pb.norm(res.rho - rho_lin))
    de = _exponent(eps, dist)
    se = _exponent(eps, size)
    le = _exponent(eps, lin) if min(lin) > 0 else np.inf
    checks = {"distance_exponent": de >= min_exponent,
              "size_linear": size_window[0] <= se <= size_window[1]}
    return ProximityReport(tuple(eps), tuple(dist), tuple(size), tuple(pot), tuple(lin), de, se, le,
                           _exponent(eps, comb), checks)
