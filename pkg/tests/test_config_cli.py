import json
import math

import numpy as np
import pytest

from beamlab.cli import main
from beamlab.config import ExperimentConfig, evaluate_expression
from beamlab.dynamics import Trajectory, explicit_first_mode_solution
from beamlab.errors import ConfigError
from beamlab.experiments import run_reproduce, certified_forcing_config

TABLE1_ROW = {
    "N": 12,
    "T": 16,
    "nonlinearity": {"kind": "cubic"},
    "initial": {"pattern": {"j": 2, "amplitude": 6.2, "residual": 0.01}},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


# expressions


def test_expression_values():
    assert evaluate_expression("8*sqrt(19)/(4+sqrt(19))") == 8 * math.sqrt(19) / (4 + math.sqrt(19))
    assert evaluate_expression("4/3") == 4 / 3
    assert evaluate_expression("-2*pi") == -2 * math.pi
    assert evaluate_expression(1.5) == 1.5


@pytest.mark.parametrize("text", ["__import__('os').system('true')", "x + 1", "sqrt", "math.pi", "1/0", "(", "sqrt(-1)", True, None])
def test_expression_rejects_unsafe_or_bad(text):
    with pytest.raises(ConfigError):
        evaluate_expression(text)


# config documents


def test_pattern_expands_to_explicit_arrays():
    cfg = ExperimentConfig.from_dict(TABLE1_ROW)
    s = cfg.initial_state()
    expected = np.full(12, 0.01)
    expected[1] = 6.2
    assert np.array_equal(s.phi, expected)
    assert np.all(s.phidot == 0)
    assert cfg.detector().eta == 0.1 and cfg.detector().T_W == 1.0


def test_round_trip_is_idempotent():
    doc = {
        **TABLE1_ROW,
        "forcing": {"j": 2, "alpha": 1, "gamma": "8*sqrt(19)/(4+sqrt(19))"},
        "solver": {"rtol": 1e-10, "atol": 1e-10, "dt_sample": 0.002},
        "detector": {"eta": 0.999, "T_W": 1},
        "threshold": {"bracket": [5, 8], "step": 0.05, "modes": [2], "scan": 0.25},
        "output": {"dir": "out"},
    }
    cfg = ExperimentConfig.from_dict(doc)
    once = cfg.to_json()
    again = ExperimentConfig.from_json(once)
    assert again == cfg
    assert again.to_json() == once
    assert again.digest() == cfg.digest()
    # the expression text survives, the value is resolved at parse time
    assert json.loads(once)["forcing"]["gamma"] == "8*sqrt(19)/(4+sqrt(19))"
    assert cfg.modal_forcing().gamma == pytest.approx(8 * math.sqrt(19) / (4 + math.sqrt(19)), rel=1e-15)


def test_explicit_initial_round_trip():
    cfg = certified_forcing_config()
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    assert cfg.detector().eta == 0.999


@pytest.mark.parametrize(
    "change",
    [
        {"N": 0},
        {"N": 2.5},
        {"T": -1},
        {"nonlinearity": {"kind": "quadratic"}},
        {"nonlinearity": {"kind": "positive_part"}},
        {"initial": {"pattern": {"j": 13, "amplitude": 1}}},
        {"initial": {"phi": [1, 2]}},
        {"forcing": {"j": 1, "alpha": 1, "gamma": "0"}},
        {"forcing": {"j": 1, "alpha": -1, "gamma": 1}},
        {"detector": {"eta": 1.5}},
        {"colour": "blue"},
    ],
)
def test_invalid_configs(change):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**TABLE1_ROW, **change})


def test_missing_key_and_bad_json():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"N": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")


def test_truncation_cap_is_a_config_error(monkeypatch):
    monkeypatch.setenv("BEAMLAB_MAX_N", "8")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(TABLE1_ROW)


# command line


def test_simulate_zero_data_gives_zero_csv(tmp_path, capsys):
    cfg = write(tmp_path, {"N": 3, "T": 0.5, "nonlinearity": {"kind": "cubic"}, "initial": {"phi": [0, 0, 0]}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    tr = Trajectory.from_csv(tmp_path / "o" / "trajectory.csv")
    assert np.all(tr.phi == 0) and np.all(tr.phidot == 0) and np.all(tr.energy == 0)
    lines = (tmp_path / "o" / "energy.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,E,rel_drift"
    assert json.loads(capsys.readouterr().out)["samples"] == tr.t.size


def test_simulate_explicit_solution_config(tmp_path):
    doc = {
        "N": 5,
        "T": 3 * math.pi / 2,
        "nonlinearity": {"kind": "positive_part", "mu": 3},
        "initial": {"phi": [0, 0, 0, 0, 0], "phidot": [1, 0, 0, 0, 0]},
    }
    assert main(["simulate", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 0
    tr = Trajectory.from_csv(tmp_path / "o" / "trajectory.csv")
    assert np.max(np.abs(tr.phi[:, 0] - explicit_first_mode_solution(tr.t))) <= 1e-6


def test_outputs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, {"N": 4, "T": 1.0, "nonlinearity": {"kind": "positive_cubic"}, "initial": {"phi": [0.5, 0.1, 0, 0.2]}})
    for out in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    for name in ("trajectory.csv", "energy.csv", "run.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_overrides_reach_the_run(tmp_path):
    cfg = write(tmp_path, {"N": 2, "T": 0.1, "nonlinearity": {"kind": "cubic"}, "initial": {"phi": [0.1, 0]}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"), "--tol", "1e-7", "--sample-dt", "0.01"]) == 0
    solver = json.loads((tmp_path / "o" / "run.json").read_text())["config"]["solver"]
    assert solver == {"rtol": 1e-7, "atol": 1e-7, "dt_sample": 0.01}


def test_exit_code_config_error(tmp_path, capsys):
    cfg = write(tmp_path, {"N": 2, "T": 1, "nonlinearity": {"kind": "wat"}, "initial": {"phi": [1, 0]}})
    assert main(["simulate", "--config", cfg]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["exit_code"] == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_exit_code_solver_failure(tmp_path, capsys):
    # too many samples for the default cap
    cfg = write(tmp_path, {"N": 2, "T": 6000, "nonlinearity": {"kind": "cubic"}, "initial": {"phi": [1, 0]}})
    assert main(["simulate", "--config", cfg]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "ResourceLimitError"


def test_exit_code_no_prevailing_mode(tmp_path, capsys):
    cfg = write(tmp_path, {"N": 3, "T": 3, "nonlinearity": {"kind": "cubic"}, "initial": {"phi": [1, 1, 0]}})
    assert main(["detect", "--config", cfg]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "NoPrevailingModeError"


def test_detect_writes_verdict_with_digest(tmp_path):
    doc = {"N": 3, "T": 6, "nonlinearity": {"kind": "cubic"}, "initial": {"pattern": {"j": 2, "amplitude": 10, "residual": 0.01}}}
    assert main(["detect", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 0
    verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert verdict["status"] == "Unstable" and verdict["witness_mode"] == 1
    assert verdict["config_digest"] == ExperimentConfig.from_dict(doc).digest()


def test_threshold_command(tmp_path, capsys):
    doc = {
        "N": 3,
        "T": 6,
        "nonlinearity": {"kind": "cubic"},
        "initial": {"pattern": {"j": 2, "amplitude": 2, "residual": 0.01}},
        "threshold": {"bracket": [2, 20], "step": 0.5},
    }
    assert main(["threshold", "--config", write(tmp_path, doc)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["bracket"][1] - res["bracket"][0] <= 0.5
    bad = {**doc, "threshold": {"bracket": [0.5, 1], "step": 0.1}}
    assert main(["threshold", "--config", write(tmp_path, bad, "bad.json")]) == 2


def test_certify_command_on_reference_example(tmp_path, capsys):
    assert main(["certify", "--config", write(tmp_path, certified_forcing_config().to_dict())]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "Certified-Stable"


def test_reproduce_rejects_unknown_target():
    with pytest.raises(SystemExit) as info:
        main(["reproduce", "table9"])
    assert info.value.code == 2


def test_reproduce_certified_target_embeds_config(tmp_path):
    report = run_reproduce("sec53", str(tmp_path))
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["status"] == report["status"] == "Certified-Stable"
    assert saved["config"] == certified_forcing_config().to_dict()
    assert (tmp_path / "sec53" / "certificate.json").exists()
