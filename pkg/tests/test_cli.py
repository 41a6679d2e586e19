from __future__ import annotations

import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from subspace_evt.cli import EXIT_OK, EXIT_REJECT, EXIT_RUNTIME, EXIT_USAGE, build_parser, main
from subspace_evt.generate import NoiseSpec, Seed, SignalSpec, generate_noise, generate_signal, random_frame
from subspace_evt.linalg import write_csv, write_dmat

SUBCOMMANDS = ["test", "debias", "simulate", "saddlepoint-check", "validate"]


@pytest.fixture
def null_instance(tmp_path):
    M, truth = generate_signal(SignalSpec(120, 140, 2, (80.0, 60.0)), Seed(0))
    write_dmat(tmp_path / "M.dmat", M)
    write_csv(tmp_path / "U0.csv", truth.U)
    write_csv(tmp_path / "U1.csv", random_frame(120, 2, np.random.default_rng(9)))
    noisy = M + generate_noise(NoiseSpec.iid_gaussian(), 120, 140, Seed(1))
    write_dmat(tmp_path / "Mn.dmat", noisy)
    return tmp_path, truth


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_exits_zero_and_lists_flags(cmd, capsys):
    with pytest.raises(SystemExit) as info:
        main([cmd, "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in out


def test_alpha_out_of_range_names_flag(null_instance, capsys):
    d, _ = null_instance
    with pytest.raises(SystemExit) as info:
        main(["test", "--matrix", str(d / "M.dmat"), "--rank", "2", "--null", str(d / "U0.csv"), "--alpha", "1.5", "--sigma", "1"])
    assert info.value.code == EXIT_USAGE
    assert "--alpha" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["debias", "--svals", "3", "--n", "5", "--m", "5", "--sigma", "1", "--bogus"])
    assert info.value.code == EXIT_USAGE


def test_plugin_without_sigma(null_instance, capsys):
    d, _ = null_instance
    code = main(["test", "--matrix", str(d / "M.dmat"), "--rank", "2", "--null", str(d / "U0.csv")])
    assert code == EXIT_USAGE and "--sigma" in capsys.readouterr().err


def test_noiseless_null_accepts(null_instance, capsys):
    d, truth = null_instance
    code = main(["test", "--matrix", str(d / "M.dmat"), "--rank", "2", "--null", str(d / "U0.csv"),
                 "--mode", "oracle", "--oracle-s", "80,60", "--json"])
    assert code == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["decision"] == "accept" and rep["statistic"] < -5
    assert rep["diagnostics"]["kind"] == "oracle"


def test_exit_code_decision(null_instance, capsys):
    d, _ = null_instance
    args = ["test", "--matrix", str(d / "Mn.dmat"), "--rank", "2", "--null", str(d / "U1.csv"), "--sigma", "1"]
    assert main(args) == EXIT_OK
    assert "decision:       reject" in capsys.readouterr().out
    assert main([*args, "--exit-code-decision"]) == EXIT_REJECT


def test_plugin_json_output(null_instance, capsys):
    d, _ = null_instance
    code = main(["test", "--matrix", str(d / "Mn.dmat"), "--rank", "2", "--null", str(d / "U0.csv"), "--sigma", "1", "--json"])
    assert code == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) == {"statistic", "critical_value", "alpha", "p_value", "decision", "diagnostics"}
    assert rep["diagnostics"]["kind"] == "plugin"


def _csv(out):
    lines = out.strip().splitlines()
    return lines[0].split(","), [list(map(float, ln.split(","))) for ln in lines[1:]]


def test_debias_examples(capsys):
    assert main(["debias", "--svals", "110", "--n", "1000", "--m", "1000", "--sigma", "1"]) == EXIT_OK
    header, rows = _csv(capsys.readouterr().out)
    assert header == ["shat", "stilde", "theta"]
    assert rows[0][1] == pytest.approx(100.0, rel=1e-14) and rows[0][2] == pytest.approx(110.0, rel=1e-14)
    assert main(["debias", "--svals", "5,3", "--n", "10", "--m", "10", "--sigma", "0"]) == EXIT_OK
    _, rows = _csv(capsys.readouterr().out)
    assert [r[1] for r in rows] == [5.0, 3.0]


def test_debias_file_input(tmp_path, capsys):
    write_csv(tmp_path / "s.csv", np.array([[110.0], [120.0]]))
    assert main(["debias", "--svals", str(tmp_path / "s.csv"), "--n", "1000", "--m", "1000", "--sigma", "1"]) == EXIT_OK
    _, rows = _csv(capsys.readouterr().out)
    assert rows[0][0] == 120.0 and rows[1][1] == pytest.approx(100.0)


def test_debias_below_bulk(capsys):
    assert main(["debias", "--svals", "200,40", "--n", "1000", "--m", "1000", "--sigma", "1"]) == EXIT_RUNTIME
    assert "[1]" in capsys.readouterr().err


def test_simulate_unknown_preset(tmp_path, capsys):
    assert main(["simulate", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "table2_power" in err and "fig1_null" in err


def test_simulate_requires_source():
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == EXIT_USAGE


def test_simulate_preset_smoke_and_repeatable(tmp_path):
    args = ["simulate", "--preset", "table2_power", "--scale", "0.25", "--replicates", "20"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--out", str(tmp_path / "b"), "--workers", "2"]) == EXIT_OK
    a = (tmp_path / "a" / "table2_power" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "table2_power" / "results.csv").read_bytes()


def test_simulate_config_file(tmp_path):
    cfg = {
        "name": "from_file", "experiment_kind": "null_distribution",
        "signal": {"m_ratio": 1.2, "sr_kind": "power", "sr_exp": 0.9}, "noise": {"kind": "iid_gaussian", "sigma": 1.0},
        "r": 1, "alpha": 0.1, "replicates": 12, "sweep": [{"n": [30]}],
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path), "--seed", "5"]) == EXIT_OK
    summary = json.loads((tmp_path / "from_file" / "summary.json").read_text())
    assert summary["master_seed"] == 5
    assert len((tmp_path / "from_file" / "samples.csv").read_text().splitlines()) == 13


def test_saddlepoint_check(capsys):
    assert main(["saddlepoint-check", "--lambdas", "2"]) == EXIT_OK
    header, rows = _csv(capsys.readouterr().out)
    assert header == ["x", "exact_tail", "gengamma_tail", "ratio", "A"]
    assert len(rows) == 3
    for row in rows:
        assert abs(row[3] - 1) <= 1e-6
    assert main(["saddlepoint-check", "--lambdas", "2,0.5,0.2222222222222222"]) == EXIT_OK
    _, rows = _csv(capsys.readouterr().out)
    assert abs(rows[-1][3] - rows[-1][4]) <= 0.1 * rows[-1][4]
    assert main(["saddlepoint-check", "--lambdas", "2", "--grid-quantiles", "0.9,0.5"]) == EXIT_USAGE


def test_validate(tmp_path, capsys):
    n = 16
    write_csv(tmp_path / "u.csv", np.ones((n, 1)) / math.sqrt(n))
    assert main(["validate", "--null", str(tmp_path / "u.csv"), "--c-mu", "1", "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["in_parameter_space"] is True
    write_csv(tmp_path / "e.csv", np.eye(n)[:, :1])
    with pytest.warns(UserWarning):
        assert main(["validate", "--null", str(tmp_path / "e.csv")]) == EXIT_OK
    assert "in_parameter_space: False" in capsys.readouterr().out


def test_missing_file_is_runtime_error(tmp_path):
    assert main(["validate", "--null", str(tmp_path / "missing.csv")]) == EXIT_RUNTIME


@pytest.mark.skipif(shutil.which("subspace-evt") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["subspace-evt", "debias", "--svals", "110", "--n", "1000", "--m", "1000", "--sigma", "1"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.splitlines()[1].split(",")[1] == "100.0"
