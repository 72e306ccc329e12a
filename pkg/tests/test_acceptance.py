"""Acceptance suite: one test per criterion, each recorded for the terminal summary."""
from pathlib import Path

import numpy as np
import pytest

from screened_vp import cli
from screened_vp import equilibria as eq
from screened_vp import fixedpoint as fp
from screened_vp import norms
from screened_vp import transport_ops as to
from screened_vp.discretization import RadialGrid, SpatialGrid, TimeGrid, VelocityGrid
from screened_vp.penrose import penrose_margin
from screened_vp.volterra import volterra_solve

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
MAXWELLIAN_MARGIN = 0.7509172785917615
DOUBLE_MARGIN = 0.7153130631


def run_config(name, root):
    cfg = cli.load_config(CONFIGS / f"{name}.cfg")
    return cli.run(cfg, root / name)


def fmt(d):
    return ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items())


@pytest.fixture(scope="session")
def out(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def kernel_run(out):
    return run_config("kernel_audit", out)


@pytest.fixture(scope="session")
def nonlinear():
    cfg = cli.load_config(CONFIGS / "nonlinear_picard.cfg")
    xgrid, vgrid, times = cli._grids(cfg)
    problems, results = [], []
    for eps in cfg.eps_ladder:
        pb = fp.NonlinearProblem(cli.make_profile(cfg), cli.make_data(cfg, eps), xgrid, vgrid, times,
                                 nl=cli.make_nonlinearity(cfg), a=cfg.a)
        problems.append(pb)
        results.append(fp.picard(pb, cfg.max_iter, cfg.tol))
    return cfg, problems, results


@pytest.mark.filterwarnings("ignore:non-radial profile")
def test_criterion_01_penrose(criterion):
    prof = eq.maxwellian(3)
    base = penrose_margin(prof)
    fine = penrose_margin(prof, n_omega=2401, n_xi=481)
    double = penrose_margin(eq.double_maxwellian(3, 3.0, 0.5))
    rel = abs(base.margin - fine.margin) / fine.margin
    ok = (base.certified_margin > 0 and rel <= 1e-3 and double.margin < base.margin
          and abs(base.margin - MAXWELLIAN_MARGIN) <= 1e-9 and abs(double.margin - DOUBLE_MARGIN) <= 1e-9)
    criterion(1, "Penrose margin", ok, fmt({"margin": base.margin, "relative_gap": rel, "double": double.margin}))
    assert ok


def test_criterion_02_cancellation(criterion, kernel_run, nonlinear):
    _, problems, _ = nonlinear
    values = [kernel_run.constants["cancellation"]] + [pb.meta["cancellation"] for pb in problems]
    ok = kernel_run.error is None and max(values) <= 1e-10
    criterion(2, "kernel cancellation", ok, fmt({"max_zero_mode": max(values), "tables": len(values)}))
    assert ok


def test_criterion_03_toy_resolvent(criterion):
    c = 0.6
    errs = []
    for dt in (1e-3, 5e-4):
        t = np.arange(0, 5.0 + dt / 2, dt)
        k = c * np.exp(-t)[:, None]
        g = volterra_solve(k, k, dt)[:, 0]
        errs.append(float(np.max(np.abs(g - c * np.exp(-(1 - c) * t)))))
    ok = errs[0] <= 1e-6 and errs[0] / errs[1] >= 3.5
    criterion(3, "toy resolvent", ok, fmt({"error": errs[0], "halving_gain": errs[0] / errs[1]}))
    assert ok


def test_criterion_04_kernel_decay(criterion, kernel_run):
    g0 = kernel_run.exponents.get("kernel_gamma0", np.nan)
    g1 = kernel_run.exponents.get("kernel_gamma1", np.nan)
    ok = abs(g0 + 4.0) <= 0.15 and abs(g1 + 5.0) <= 0.2
    criterion(4, "kernel decay", ok, fmt({"slope_gamma0": g0, "slope_gamma1": g1}))
    assert ok


def test_criterion_05_linear_decay(criterion, out):
    s = run_config("linear_decay", out)
    keys = ("exponent", "no_log_drift", "l1_bounded")
    ok = s.error is None and all(s.checks.get(k, False) for k in keys)
    criterion(5, "linearised decay", ok,
              fmt({"slope": s.exponents.get("linear_sup", np.nan),
                   "log_drift": s.constants.get("log_drift", np.nan),
                   "halfwidth": s.constants.get("log_drift_halfwidth", np.nan),
                   "l1_variation": s.constants.get("l1_variation", np.nan)}))
    assert ok


def test_criterion_06_free_transport(criterion):
    data = to.gaussian_data()
    rep = to.free_decay_report(data, TimeGrid.uniform(64.0, 1280), RadialGrid(512.0, 1024))
    xg, vg = SpatialGrid(3, 6.0, 8), VelocityGrid(3, 7.0, 28)
    want = to.free_density_closed(data, 1.0, xg.coords())
    err = float(np.max(np.abs(to.free_density(data, 1.0, xg, vg) - want)) / np.max(want))
    ok = rep.checks["exponent"] and err <= 1e-7
    criterion(6, "free transport", ok, fmt({"slope": rep.fit.slope, "closed_form_error": err}))
    assert ok


def test_criterion_07_characteristics(criterion, out):
    s = run_config("flow_audit", out)
    ok = s.error is None and len(s.checks) == 5 and all(s.checks.values())
    detail = fmt({k: s.constants[k] for k in ("zero_field_error", "constant_field_error", "jacobian_defect",
                                              "psi_residual") if k in s.constants})
    criterion(7, "characteristics", ok, detail + f", order={s.exponents.get('step_order', np.nan):.3f}")
    assert ok


def test_criterion_08_reaction_superlinear(criterion, nonlinear):
    cfg, problems, _ = nonlinear
    pb = problems[0]
    E = pb.electric_field(pb.U_start)
    full = pb.norm(to.reaction_term(E, pb.profile, pb.engine).values)
    half = pb.norm(to.reaction_term(0.5 * E, pb.profile, pb.engine).values)
    bound = 2.0 ** (1 + cfg.a - 0.1)
    ok = full / half >= bound
    criterion(8, "reaction superlinearity", ok, fmt({"ratio": full / half, "bound": bound}))
    assert ok


def test_criterion_09_picard(criterion, nonlinear):
    _, _, results = nonlinear
    res = results[0]
    ok = res.converged and res.iterations <= 8 and fp.contraction_ok(res, from_step=2, bound=0.5)
    ratios = res.ratios[1:]
    criterion(9, "Picard contraction", ok,
              f"iterations={res.iterations}, converged={res.converged}, max_ratio={np.nanmax(ratios):.3g}, "
              f"max_two_step_ratio={np.nanmax(res.two_step_ratios):.3g}")
    assert ok


def test_criterion_10_proximity(criterion, nonlinear):
    _, problems, results = nonlinear
    if not all(r.converged for r in results):
        eps = [pb.data.eps for pb, r in zip(problems, results) if not r.converged]
        criterion(10, "proximity scaling", False, f"runs not converged at eps={eps}")
        pytest.fail(f"proximity audit needs converged runs, eps={eps} did not converge")
    rep = fp.proximity_audit(problems, results)
    ok = rep.passed
    criterion(10, "proximity scaling", ok,
              fmt({"distance_exponent": rep.distance_exponent, "size_exponent": rep.size_exponent,
                   "combined_exponent": rep.combined_exponent, "remainder_exponent": rep.linear_exponent}))
    assert ok


def test_criterion_11_norms(criterion):
    rng = np.random.default_rng(7)
    grid = SpatialGrid(3, 4.0, 16)

    def field():
        return grid.inverse(grid.forward(rng.standard_normal(grid.shape)) * np.exp(-grid.k2()))

    failures = []
    f, g = field(), field()
    for p in (1, np.inf):
        b = norms.besov_seminorm(f, grid, 0.75, p).value
        if norms.besov_seminorm(np.zeros(grid.shape), grid, 0.75, p).value != 0.0:
            failures.append("zero")
        if abs(norms.besov_seminorm(-2.5 * f, grid, 0.75, p).value - 2.5 * b) > 1e-12 * b:
            failures.append("homogeneity")
        if norms.besov_seminorm(f + g, grid, 0.75, p).value > b + norms.besov_seminorm(g, grid, 0.75, p).value:
            failures.append("triangle")
        small = norms.shift_set(grid, octaves=2)
        if norms.besov_seminorm(f, grid, 0.75, p, small).value > b:
            failures.append("monotonicity")
    times = TimeGrid.uniform(2.0, 2)
    F, G = np.stack([field() for _ in times.t]), np.stack([field() for _ in times.t])
    tw = lambda x: norms.time_weighted(x, times, grid, 0.75).value
    if tw(F + G) > tw(F) + tw(G) or abs(tw(3 * F) - 3 * tw(F)) > 1e-12 * tw(F):
        failures.append("time_weighted")
    mode_grid = SpatialGrid(3, np.pi, 16)
    x = mode_grid.coords(sparse=False)
    shifts = norms.shift_set(mode_grid)
    expected = max(np.max(np.abs(np.cos(3 * mode_grid.axis) - np.cos(3 * (mode_grid.axis - o[0] * mode_grid.h))))
                   / ln ** 0.75 for o, ln in zip(shifts.offsets, shifts.lengths))
    got = norms.besov_seminorm(np.cos(3 * x[0]), mode_grid, 0.75, np.inf, shifts).value
    mode_err = abs(got - expected)
    if mode_err > 1e-10:
        failures.append("single_mode")
    ok = not failures
    criterion(11, "norm machinery", ok, f"single_mode_error={mode_err:.3g}, failures={failures or 'none'}")
    assert ok


def test_criterion_12_scattering(criterion, out):
    s = run_config("scattering", out)
    keys = ("zero_field_profile_exact", "cauchy_slope", "deviation_linear_in_eps")
    ok = s.error is None and all(s.checks.get(k, False) for k in keys)
    criterion(12, "scattering", ok,
              fmt({"cauchy_slope": s.exponents.get("cauchy", np.nan), "target": s.constants.get("cauchy_target"),
                   "deviation_ratio": s.constants.get("deviation_ratio", np.nan)}))
    assert ok
