import json

import numpy as np
import pytest

from screened_vp import cli

FREE = """
scenario = linear-decay   # free transport only
profile = zero
T = 64
steps = 640
radial_R = 512
radial_n = 1024
"""


def test_config_round_trip():
    cfg = cli.parse_config(FREE + "eps_ladder = 1e-3, 5e-4\n")
    assert cfg.profile == "zero" and cfg.steps == 640 and cfg.eps_ladder == (1e-3, 5e-4)
    assert cli.parse_config(cli.dump_config(cfg)) == cfg


@pytest.mark.parametrize("extra", ["a = 0.5", "a = 1.0", "d = 2", "tol = 0", "colour = red"])
def test_invalid_configs_rejected(extra):
    with pytest.raises(ValueError):
        cli.parse_config(FREE + extra + "\n")


def test_missing_scenario_rejected():
    with pytest.raises(ValueError):
        cli.parse_config("d = 3\n")


@pytest.fixture(scope="module")
def free_runs(tmp_path_factory):
    cfg = cli.parse_config(FREE)
    dirs = [tmp_path_factory.mktemp(f"run{k}") for k in range(2)]
    return [cli.run(cfg, d) for d in dirs], dirs


def test_free_transport_scenario(free_runs):
    (s, _), _ = free_runs
    assert s.error is None
    assert abs(s.exponents["linear_sup"] + 3.0) <= 0.15
    assert s.checks["exponent"] and s.checks["l1_bounded"]


def test_outputs_deterministic(free_runs):
    _, (a, b) = free_runs
    for name in ("summary.csv", "verdicts.json", "config.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert sorted(p.name for p in (a / "curves").iterdir()) == sorted(p.name for p in (b / "curves").iterdir())


def test_verify_and_plots(free_runs, tmp_path, capsys):
    (s, _), (a, _) = free_runs
    assert cli.verify(a) == s.exit_code
    cfg_path = tmp_path / "free.cfg"
    cfg_path.write_text(FREE)
    assert cli.main(["run", str(cfg_path), "--output", str(a), "--verify-only"]) == s.exit_code
    t, value, env = cli.load_dump(a / "curves" / "linear_sup.bin")
    assert np.all(np.diff(t) > 0) and np.all(value > 0)
    header = (a / "curves" / "linear_sup.csv").read_text().splitlines()[0]
    assert header == "t,value,envelope"
    verdicts = json.loads((a / "verdicts.json").read_text())
    assert verdicts["exit_code"] == s.exit_code


def test_corrupted_dump_detected(free_runs):
    _, (_, b) = free_runs
    path = b / "density_hat.bin"
    raw = bytearray(path.read_bytes())
    raw[0] ^= 1
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        cli.verify(b)


def test_plots_without_curves(tmp_path):
    with pytest.raises(FileNotFoundError):
        cli.emit_plots_data(tmp_path)
    assert cli.main(["plots", str(tmp_path)]) == 2


def test_execution_error_reported(tmp_path):
    cfg = cli.parse_config(FREE + "d = 4\n")
    s = cli.run(cfg, tmp_path)
    assert s.exit_code == 2 and s.error.startswith("cli: ValueError")
    assert json.loads((tmp_path / "verdicts.json").read_text())["exit_code"] == 2
