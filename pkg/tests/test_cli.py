import csv
import json

import pytest

from acouwave.cli import EXIT_CONFIG, EXIT_OK, main
from acouwave.config import SMALLNESS_NAME, parse_config, validate
from acouwave.errors import ConfigError

from conftest import CONFIGS

BASE = """\
scenario: solve
domain: {lengths: [1.0, 1.0]}
grid: {modes: 4}
time: {T: 1.0, steps: 8}
coefficients:
  ibvp: {mu: 0.1, eta: 0.1, eps: 0.01}
"""


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config(BASE + "bogus: 1\n")
    assert err.value.line == 7 and "line 7" in str(err.value)


def test_negative_viscosity_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config(BASE.replace("mu: 0.1", "mu: -0.1"))
    assert err.value.line == 6


def test_out_of_band_mode_is_hard_error():
    text = BASE + "initial:\n  modes:\n    - {component: p, k: [5, 1]}\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == 9
    assert parse_config(text, overrides={"modes": 6}).modes == (6, 6)


def test_thin_quadrature_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("grid: {modes: 4}", "grid: {modes: 4, quadNodes: 5}"))


def test_validate_zero_data_passes():
    diags = validate(parse_config(BASE))
    assert all(d["status"] == "pass" for d in diags)
    assert any(d["check"] == SMALLNESS_NAME for d in diags)


def test_validate_warns_on_large_data(small_data_ledger):
    led = small_data_ledger
    norm = 0.6 / (led.cG ** 2 * led.K)
    text = BASE.replace("modes: 4", "modes: 8") + f"initial:\n  normH1: {norm!r}\n  modes:\n    - {{k: [1, 1]}}\n"
    diags = {d["check"]: d for d in validate(parse_config(text), led)}
    check = diags[SMALLNESS_NAME]
    assert check["status"] == "warn" and check["value"] == pytest.approx(0.6, rel=1e-9)
    assert SMALLNESS_NAME in check["message"]


def test_cli_solve_zero_data(tmp_path):
    assert main(["solve", "--config", str(CONFIGS / "zero_data.yaml"), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "ok" and summary["newton"]["iterations"] == 1
    assert all(v == 0.0 for v in summary["norms"].values())
    assert summary["config"]["grid"]["modes"] == [6, 6]
    for name in ("timeseries.csv", "newton.csv"):
        assert (tmp_path / name).exists()


def test_cli_semigroup_sweep(tmp_path):
    code = main(["semigroup", "--config", str(CONFIGS / "small_data.yaml"), "--out", str(tmp_path), "--modes", "4"])
    assert code == EXIT_OK
    with open(tmp_path / "resolvent.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 14 and float(rows[0]["lambda"]) == 0.0


def test_cli_runs_are_reproducible(tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["solve", "--config", str(CONFIGS / "small_data.yaml"), "--out", str(out),
                "--seed", "3", "--modes", "4", "--steps", "8"]
        assert main(args) == EXIT_OK
        outputs.append((out / "timeseries.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_cli_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(BASE + "grid2: 3\n")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "line 7" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
