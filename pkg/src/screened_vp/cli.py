"""Scenario runner: ``screened-vp run <config> [--output DIR] [--threads N] [--verify-only]``.

Configurations are flat ``key = value`` files with ``#`` comments.  Every run
writes ``summary.csv`` and ``verdicts.json`` (deterministic for a fixed
configuration), ``timings.json``, binary dumps ``*.bin`` with a JSON header
each, and ``(t, value, envelope)`` curve bundles under ``curves/``.

Exit codes: 0 all checks pass, 1 some check fails, 2 execution error.
"""
import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
import time
import traceback
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

SCENARIOS = ("penrose-scan", "kernel-audit", "linear-decay", "flow-audit", "nonlinear-picard", "scattering")
A_MIN = (math.sqrt(5.0) - 1.0) / 2.0
_SECTION = "scenario"


@dataclass
class ScenarioConfig:
    scenario: str
    d: int = 3
    profile: str = "maxwellian"             # maxwellian | double-maxwellian | zero
    profile_shift: float = 3.0
    profile_weight: float = 0.5
    compare_profile: str = "none"           # penrose-scan: profile whose margin must be smaller
    nonlinearity: str = "screened"          # screened | massless-electrons | linear
    data: str = "gaussian"                  # gaussian | dipole
    a: float = 0.75
    eps: float = 1e-3
    eps_ladder: tuple = ()
    sigma_x: float = 1.5
    sigma_v: float = 1.0
    nx: int = 16
    box: float = 12.0
    nv: int = 16
    vbox: float = 6.0
    T: float = 16.0
    steps: int = 64
    radial_R: float = 512.0
    radial_n: int = 1024
    audit_points: int = 32
    field_amplitude: float = 0.1
    ladder: tuple = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    tol: float = 1e-8
    max_iter: int = 8
    slope_tol: float = 0.3
    C0: float = 0.0                         # smallness gate constant; 0 disables the gate
    output: str = "runs"
    seed: int = 0
    threads: int = 1

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario '{self.scenario}' (expected one of {', '.join(SCENARIOS)})")
        if not A_MIN < self.a < 1.0:
            raise ValueError(f"a = {self.a} outside the admissible interval ({A_MIN:.6f}, 1)")
        if self.d < 3:
            raise ValueError(f"d = {self.d}: dimension must be at least 3")
        for name in ("tol", "slope_tol", "eps", "T", "sigma_x", "sigma_v", "box", "vbox", "radial_R",
                     "field_amplitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("steps", "nx", "nv", "radial_n", "max_iter", "audit_points", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.C0 < 0:
            raise ValueError("C0 must be non-negative")
        return self


def _convert(f, raw):
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    if kind == "tuple":
        return tuple(float(x) for x in raw.replace(",", " ").split())
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw.strip()


def parse_config(text):
    """Parse the flat ``key = value`` format into a validated ``ScenarioConfig``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string(f"[{_SECTION}]\n" + text)
    raw = dict(cp[_SECTION])
    known = {f.name: f for f in fields(ScenarioConfig)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    if "scenario" not in raw:
        raise ValueError("configuration lacks 'scenario'")
    values = {k: _convert(known[k], v) for k, v in raw.items()}
    return ScenarioConfig(**values).validate()


def dump_config(cfg):
    """Serialise in the same flat format; ``parse_config(dump_config(c)) == c``."""
    lines = []
    for f in fields(ScenarioConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def load_config(path):
    return parse_config(Path(path).read_text())


@dataclass
class RunSummary:
    scenario: str
    checks: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    wall: dict = field(default_factory=dict)
    error: str = None

    @property
    def exit_code(self):
        if self.error is not None:
            return 2
        return 0 if all(self.checks.values()) else 1


# ---------------------------------------------------------------- persistence

class Artifacts:
    """Output directory with binary dumps and curve bundles."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "curves").mkdir(exist_ok=True)

    def dump(self, name, array, sub=""):
        arr = np.ascontiguousarray(array)
        path = self.root / sub / f"{name}.bin"
        path.write_bytes(arr.tobytes())
        header = {"dtype": arr.dtype.str, "shape": list(arr.shape),
                  "sha256": hashlib.sha256(arr.tobytes()).hexdigest()}
        path.with_suffix(".json").write_text(json.dumps(header, indent=1))

    def curve(self, name, t, value, envelope=None):
        env = np.full_like(np.asarray(value, float), np.nan) if envelope is None else envelope
        self.dump(name, np.stack([np.asarray(t, float), np.asarray(value, float), np.asarray(env, float)]),
                  sub="curves")


def load_dump(path):
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    raw = path.read_bytes()
    if hashlib.sha256(raw).hexdigest() != header["sha256"]:
        raise ValueError(f"checksum mismatch in {path.name}")
    return np.frombuffer(raw, dtype=np.dtype(header["dtype"])).reshape(header["shape"])


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def write_summary(summary, cfg, root):
    root = Path(root)
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "name", "value"])
        w.writerow(["scenario", "scenario", summary.scenario])
        for k, v in summary.checks.items():
            w.writerow(["check", k, "pass" if v else "fail"])
        for k, v in summary.exponents.items():
            w.writerow(["exponent", k, repr(float(v))])
        for k, v in summary.constants.items():
            w.writerow(["constant", k, json.dumps(_plain(v))])
        if summary.error:
            w.writerow(["error", "error", summary.error])
    verdicts = {"scenario": summary.scenario, "checks": _plain(summary.checks),
                "exit_code": summary.exit_code, "error": summary.error}
    (root / "verdicts.json").write_text(json.dumps(verdicts, indent=1, sort_keys=True))
    (root / "timings.json").write_text(json.dumps(_plain(summary.wall), indent=1, sort_keys=True))
    (root / "config.txt").write_text(dump_config(cfg))


def emit_plots_data(run_dir):
    """Write one ``t,value,envelope`` CSV per curve bundle of a run; returns the written paths."""
    root = Path(run_dir)
    bins = sorted((root / "curves").glob("*.bin")) if (root / "curves").is_dir() else []
    if not bins:
        raise FileNotFoundError(f"no curve bundles under {root}")
    out = []
    for b in bins:
        t, value, env = load_dump(b)
        path = b.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value", "envelope"])
            for row in zip(t, value, env):
                w.writerow([repr(float(x)) for x in row])
        out.append(path)
    return out


# ---------------------------------------------------------------- model construction

def make_profile(cfg, which=None):
    from . import equilibria as eq
    kind = which or cfg.profile
    if kind == "maxwellian":
        return eq.maxwellian(cfg.d)
    if kind == "double-maxwellian":
        return eq.double_maxwellian(cfg.d, cfg.profile_shift, cfg.profile_weight)
    if kind == "zero":
        return eq.zero_profile(cfg.d)
    raise ValueError(f"unknown profile '{kind}'")


def make_nonlinearity(cfg):
    from . import field_solver as fs
    table = {"screened": fs.screened, "massless-electrons": fs.massless_electrons, "linear": fs.linear_coupling}
    if cfg.nonlinearity not in table:
        raise ValueError(f"unknown nonlinearity '{cfg.nonlinearity}'")
    return table[cfg.nonlinearity]()


def make_data(cfg, eps=None):
    from . import transport_ops as to
    maker = {"gaussian": to.gaussian_data, "dipole": to.dipole_data}.get(cfg.data)
    if maker is None:
        raise ValueError(f"unknown initial data '{cfg.data}'")
    return maker(cfg.d, cfg.eps if eps is None else eps, cfg.sigma_x, cfg.sigma_v)


def _grids(cfg):
    from .discretization import SpatialGrid, TimeGrid, VelocityGrid
    return (SpatialGrid(cfg.d, cfg.box, cfg.nx), VelocityGrid(cfg.d, cfg.vbox, cfg.nv),
            TimeGrid.uniform(cfg.T, cfg.steps))


def _radial(cfg):
    from .discretization import RadialGrid, TimeGrid
    if cfg.d != 3:
        raise ValueError("radial scenarios are implemented for d = 3")
    return RadialGrid(cfg.radial_R, cfg.radial_n), TimeGrid.uniform(cfg.T, cfg.steps)


# ---------------------------------------------------------------- scenarios

def _penrose_scan(cfg, art, s):
    from .penrose import penrose_margin
    prof = make_profile(cfg)
    base = penrose_margin(prof)
    fine = penrose_margin(prof, n_omega=2401, n_xi=481)
    rel = abs(base.margin - fine.margin) / max(abs(fine.margin), 1e-300)
    s.constants.update({"margin": base.margin, "margin_fine": fine.margin, "certified_margin": base.certified_margin,
                        "tau_star": base.tau_star, "xi_star": base.xi_star})
    s.checks["margin_positive"] = base.certified_margin > 0
    s.checks["resolutions_agree"] = rel <= 1e-3
    if cfg.compare_profile != "none":
        other = penrose_margin(make_profile(cfg, cfg.compare_profile))
        s.constants["compare_margin"] = other.margin
        s.checks["compare_margin_smaller"] = other.margin < base.margin


def _kernel_audit(cfg, art, s):
    from . import kernel as kn
    grid, times = _radial(cfg)
    tables = kn.build_ghat(make_profile(cfg), times, grid)
    s.constants["cancellation"] = kn.check_cancellation(tables)
    s.checks["cancellation"] = s.constants["cancellation"] <= 1e-10
    for gamma in (0, 1):
        rep = kn.decay_audit(tables, gamma)
        s.exponents[f"kernel_gamma{gamma}"] = rep.fit.slope
        s.constants.update({f"gamma{gamma}_{k}": v for k, v in rep.constants.items()})
        s.checks.update({f"gamma{gamma}_{k}": v for k, v in rep.checks.items()})
        art.curve(f"kernel_gamma{gamma}", rep.t, rep.values, rep.envelope)
    art.dump("ghat", tables.ghat)


def _linear_decay(cfg, art, s):
    from .volterra import linear_decay_report, linear_run
    grid, times = _radial(cfg)
    prof = make_profile(cfg)
    run = linear_run(prof, make_data(cfg), times, grid)
    tol = 0.05 * cfg.d if prof.is_zero else 0.2
    rep = linear_decay_report(run, a=cfg.a, tolerance=tol)
    s.exponents["linear_sup"] = rep.fit.slope
    s.constants.update({k: v for k, v in rep.constants.items() if not isinstance(v, list)})
    s.checks.update(rep.checks)
    art.curve("linear_sup", rep.t, rep.values, rep.envelope)
    art.curve("linear_l1", rep.t, rep.constants["l1"])
    art.curve("linear_weighted_holder", rep.t, rep.constants["weighted_holder"])
    art.dump("density_hat", run.density_hat)


def _free_field(cfg, xgrid, times):
    """``-grad (1 - Delta)^{-1} rho_1`` of the configured data, rescaled to ``field_amplitude``."""
    from . import field_solver as fs
    from .discretization import SpaceTimeField
    from .transport_ops import free_density_closed
    x = xgrid.coords(sparse=False)
    rho = np.stack([free_density_closed(make_data(cfg), t, x) for t in times.t])
    E = fs.electric_field(fs.screened_inverse(rho, xgrid), xgrid)
    E *= cfg.field_amplitude / np.max(np.abs(E))
    return SpaceTimeField(E, times, xgrid, vector=True)


def _flow_audit(cfg, art, s):
    from .characteristics import flow_checks, holder_v_seminorm, phase_points
    xgrid, vgrid, times = _grids(cfg)
    E = _free_field(cfg, xgrid, times)
    t = times.t[len(times) // 2]
    metrics, checks = flow_checks(E, xgrid, vgrid, t, cfg.audit_points, cfg.seed)
    s.constants.update(metrics)
    s.checks.update(checks)
    s.exponents["step_order"] = min(metrics["observed_orders"])
    # Hölder quotient of grad_v Y in v: reported only, no threshold
    x0, v0 = phase_points(xgrid, vgrid, min(cfg.audit_points, 8), cfg.seed)
    s.constants["holder_v_grad_v_Y"], s.constants["holder_loss"] = holder_v_seminorm(E, t, x0 - t * v0, v0, cfg.a)


def _nonlinear_picard(cfg, art, s):
    from . import fixedpoint as fp
    xgrid, vgrid, times = _grids(cfg)
    ladder = cfg.eps_ladder or (cfg.eps,)
    problems, results = [], []
    for eps in ladder:
        pb = fp.NonlinearProblem(make_profile(cfg), make_data(cfg, eps), xgrid, vgrid, times,
                                 nl=make_nonlinearity(cfg), a=cfg.a, C0=cfg.C0 or None)
        res = fp.picard(pb, cfg.max_iter, cfg.tol)
        tag = f"{eps:g}"
        fp.write_log(res, art.root / f"iterations_{tag}.csv")
        art.dump(f"rho_{tag}", res.rho)
        art.dump(f"U_{tag}", res.U)
        art.curve(f"difference_{tag}", [st.k for st in res.states], [st.diff for st in res.states])
        s.constants[f"ratios_{tag}"] = res.ratios
        s.constants[f"two_step_ratios_{tag}"] = res.two_step_ratios
        s.constants[f"iterations_{tag}"] = res.iterations
        s.constants[f"mean_defect_{tag}"] = fp.mean_defect(pb, res.rho)
        s.checks[f"contraction_{tag}"] = fp.contraction_ok(res)
        s.checks[f"converged_{tag}"] = res.converged
        s.checks[f"mean_conserved_{tag}"] = s.constants[f"mean_defect_{tag}"] <= 1e-6
        problems.append(pb)
        results.append(res)
    # largest amplitude whose observed ratios stay below one half: the empirical threshold
    stable = [e for e, r in zip(ladder, results) if fp.contraction_ok(r)]
    s.constants["stability_threshold"] = max(stable) if stable else float("nan")
    if len(ladder) >= 2:
        if all(r.converged for r in results):
            rep = fp.proximity_audit(problems[:2], results[:2])
            s.exponents.update({"proximity": rep.distance_exponent, "size": rep.size_exponent,
                                "second_order_remainder": rep.linear_exponent,
                                "combined_distance": rep.combined_exponent})
            s.checks.update({f"proximity_{k}": v for k, v in rep.checks.items()})
        else:
            s.checks["proximity_runs_converged"] = False


def _scattering(cfg, art, s):
    from . import transport_ops as to
    from .characteristics import constant_field
    grid, times = _radial(cfg)
    prof = make_profile(cfg)
    rng = np.random.default_rng(cfg.seed)
    w = rng.uniform(-2 * cfg.sigma_x, 2 * cfg.sigma_x, (cfg.audit_points, cfg.d))
    v = rng.normal(0.0, cfg.sigma_v, (cfg.audit_points, cfg.d))
    ladder = [t for t in cfg.ladder if t <= cfg.T]
    # zero field: the profile is f0 itself
    xgrid, _, _ = _grids(cfg)
    zero = constant_field(np.zeros(cfg.d), times, xgrid)
    data = make_data(cfg)
    f, _, _ = to.straightened_f(data, prof, zero, ladder[-1], w, v)
    exact = data(tuple(w.T), tuple(v.T))
    s.constants["zero_field_defect"] = float(np.max(np.abs(f - exact)))
    s.checks["zero_field_profile_exact"] = s.constants["zero_field_defect"] == 0.0
    sizes = []
    for k, eps in enumerate((cfg.eps, cfg.eps / 2)):
        data = make_data(cfg, eps)
        E, _ = to.linear_field(prof, data, times, grid)
        rep = to.scattering_profile(data, prof, E, ladder, w, v, cfg.a, slope_tol=cfg.slope_tol)
        sizes.append(rep.y_inf + rep.w_inf)
        if k == 0:
            s.exponents["cauchy"] = rep.fit.slope if rep.fit is not None else -np.inf
            s.constants["cauchy_target"] = rep.target_slope
            s.checks.update(rep.checks)
            art.curve("cauchy", rep.t[1:], rep.cauchy)
            art.dump("f_inf", rep.profile)
    ratio = sizes[0] / sizes[1]
    s.constants.update({"deviation_size": sizes[0], "deviation_ratio": ratio})
    s.checks["deviation_linear_in_eps"] = abs(ratio - 2.0) <= 0.1


_RUNNERS = {"penrose-scan": _penrose_scan, "kernel-audit": _kernel_audit, "linear-decay": _linear_decay,
            "flow-audit": _flow_audit, "nonlinear-picard": _nonlinear_picard, "scattering": _scattering}


def _failing_module(tb):
    for frame in reversed(traceback.extract_tb(tb)):
        if "screened_vp" in frame.filename:
            return Path(frame.filename).stem
    return "cli"


def run(cfg, output=None):
    """Run one scenario; artifacts go to ``output`` (default ``cfg.output``)."""
    from .discretization import set_threads
    set_threads(cfg.threads)
    art = Artifacts(output or cfg.output)
    s = RunSummary(cfg.scenario)
    t0 = time.perf_counter()
    try:
        _RUNNERS[cfg.scenario](cfg, art, s)
    except Exception as exc:  # surfaced in the summary; partial artifacts stay on disk
        mod = _failing_module(exc.__traceback__)
        s.error = f"{mod}: {type(exc).__name__}: {exc} [scenario={cfg.scenario}, eps={cfg.eps:g}, a={cfg.a:g}]"
    s.wall["total_seconds"] = time.perf_counter() - t0
    write_summary(s, cfg, art.root)
    if s.error is None and any((art.root / "curves").glob("*.bin")):
        emit_plots_data(art.root)
    return s


def verify(run_dir):
    """Re-check persisted artifacts: checksums, a verdict for every check, exit code."""
    root = Path(run_dir)
    verdicts = json.loads((root / "verdicts.json").read_text())
    for b in root.rglob("*.bin"):
        load_dump(b)
    with open(root / "summary.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["kind"] == "check"]
    declared = {r["name"]: r["value"] == "pass" for r in rows}
    if declared != verdicts["checks"]:
        raise ValueError("summary.csv and verdicts.json disagree")
    if verdicts.get("error"):
        return 2
    return 0 if all(declared.values()) else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="screened-vp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("run", help="run a scenario configuration")
    rp.add_argument("config")
    rp.add_argument("--output", default=None)
    rp.add_argument("--threads", type=int, default=None)
    rp.add_argument("--verify-only", action="store_true", help="re-check persisted artifacts of a run")
    pp = sub.add_parser("plots", help="emit CSV curve bundles for a run directory")
    pp.add_argument("run_dir")
    args = ap.parse_args(argv)
    try:
        if args.command == "plots":
            for p in emit_plots_data(args.run_dir):
                print(p)
            return 0
        cfg = load_config(args.config)
        if args.threads is not None:
            cfg.threads = args.threads
            cfg.validate()
        out = args.output or cfg.output
        if args.verify_only:
            code = verify(out)
            print(f"verify {out}: exit {code}")
            return code
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    s = run(cfg, out)
    for k, v in s.checks.items():
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    if s.error:
        print(f"ERROR {s.error}", file=sys.stderr)
    return s.exit_code


if __name__ == "__main__":
    sys.exit(main())
