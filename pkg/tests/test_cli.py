import json
import os

import pytest

from chainlevy import cli
from chainlevy import ensemble as en
from chainlevy.tail_analysis import TAIL_COLUMNS


def _read(d, name):
    with open(os.path.join(d, name), "rb") as fh:
        return fh.read()


def test_tails_schema_and_manifest(tmp_path):
    out = str(tmp_path)
    rc = cli.run(["tails", "--delta", "0.5", "--B", "1", "--gamma", "1", "--N", "1e6", "--out", out])
    assert rc == 0
    lines = _read(out, "tails.csv").decode().splitlines()
    assert lines[0].split(",") == list(TAIL_COLUMNS)
    assert len(lines) == 4
    man = json.loads(_read(out, "manifest.json"))
    assert man["subcommand"] == "tails"
    assert [o["file"] for o in man["outputs"]] == ["tails.csv"]
    for key in ("config_digest", "seed", "version", "started", "finished"):
        assert key in man


def test_missing_config_file(tmp_path):
    rc = cli.run(["tails", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)])
    assert rc == 2


def test_physical_parameters_required(tmp_path):
    assert cli.run(["tails", "--B", "1", "--gamma", "1", "--N", "1e4", "--out", str(tmp_path)]) == 2
    assert cli.run(["spectral-table", "--gamma", "1", "--out", str(tmp_path)]) == 2


def test_bad_argument_is_config_error(tmp_path):
    assert cli.run(["levy-exponent", "--B", "x"]) == 2
    assert cli.run(["no-such-command"]) == 2


def test_config_file_and_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[common]\nseed = 3\n\n[levy-exponent]\nB = 1\ngamma = 1\ndelta = 0.75\n"
                   "theta = 1, 2\n")
    out = str(tmp_path / "o")
    assert cli.run(["levy-exponent", "--config", str(ini), "--out", out]) == 0
    rows = _read(out, "levy_exponent.csv").decode().splitlines()
    assert rows[1].startswith("1.0,") and len(rows) == 3
    assert json.loads(_read(out, "manifest.json"))["seed"] == 3
    out2 = str(tmp_path / "o2")
    assert cli.run(["levy-exponent", "--config", str(ini), "--delta", "0.25", "--out", out2]) == 0
    assert _read(out, "levy_exponent.csv") != _read(out2, "levy_exponent.csv")


def test_unknown_config_key(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[tails]\nbogus = 1\n")
    assert cli.run(["tails", "--config", str(ini), "--out", str(tmp_path)]) == 2


def test_reproducible_payloads_and_threads(tmp_path, monkeypatch):
    args = ["mc-charfn", "--B", "1", "--gamma", "1", "--delta", "0.75", "--N", "1e3",
            "--M", "500", "--seed", "9"]
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.run(args + ["--out", a]) == 0
    assert cli.run(args + ["--out", b, "--threads", "4"]) == 0
    for name in ("mc_charfn.csv", "mc_charfn.json"):
        assert _read(a, name) == _read(b, name)
    ma = json.loads(_read(a, "manifest.json"))
    mb = json.loads(_read(b, "manifest.json"))
    assert ma["config_digest"] == mb["config_digest"]
    assert ma["outputs"] == mb["outputs"]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.run(["spectral-table", "--B", "1", "--gamma", "1", "--n-k", "5"]) == 0
    assert os.path.isfile(tmp_path / "env" / "spectral_table.csv")


def test_tolerance_failure_exit_code(tmp_path):
    rc = cli.run(["pde-limit", "--gamma", "1", "--B-sequence", "0.5,1", "--n-points", "4096",
                  "--out", str(tmp_path)])
    assert rc == 3
    assert json.loads(_read(str(tmp_path), "manifest.json"))["passed"] is False


def test_budget_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(en, "jump_cap", lambda gamma, T: 5)
    rc = cli.run(["mc-clock", "--B", "1", "--gamma", "1", "--delta", "0.75", "--N", "100",
                  "--M", "100", "--out", str(tmp_path)])
    assert rc == 4
