from __future__ import annotations

import json
import subprocess
import sys

import jsonschema
import pytest

from conftest import MACHINES
from rha import cli
from rha.schemas import SCHEMAS
from rha.syntax import parse_file


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, cmd, *argv):
    code, out, _ = run(capsys, cmd, *argv, "--json")
    obj = json.loads(out)
    jsonschema.validate(obj, SCHEMAS[cmd])
    return code, obj


def test_validate_prints_singular(capsys):
    code, out, _ = run(capsys, "validate", "fig1.rha")
    assert code == 0 and "singular: true" in out


def test_check_exit_codes(capsys):
    assert run(capsys, "check", "fig1.rha", "--goal", "l1", "--bound", "1")[0] == 0
    assert run(capsys, "check", "fig1.rha", "--goal", "l1: y = 1/4", "--bound", "1")[0] == 1
    assert run(capsys, "check", "fig1.rha", "--goal", "l1: y = 1/4", "--bound", "2", "--depth", "1")[0] == 2


def test_check_json_and_witness(capsys, tmp_path):
    w = tmp_path / "w.json"
    code, obj = run_json(capsys, "check", "fig1.rha", "--goal", "l1: y = 1/4", "--bound", "2", "--witness", str(w))
    assert code == 0 and obj["verdict"] == "YES" and obj["witness"]["duration"] == "5/4"
    saved = json.loads(w.read_text())
    jsonschema.validate(saved, SCHEMAS["check"]["properties"]["witness"])
    code, obj = run_json(capsys, "contract", "fig1.rha", "--run", str(w))
    assert code == 0 and obj["contracted"]["states"][-1] == saved["states"][-1]


def test_check_init(capsys):
    code, out, _ = run(capsys, "check", "fig1.rha", "--goal", "l1", "--bound", "0", "--init", "l0: x = 1 & y = 0")
    assert code == 0 and "duration: 0" in out


def test_reach_json(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, obj = run_json(capsys, "reach", "gasburner.rha", "--bound", "60", "--out", str(out))
    assert code == 0 and obj["stabilized"]
    assert json.loads(out.read_text()) == obj


def test_coreach_json(capsys):
    code, obj = run_json(capsys, "coreach", "fig1.rha", "--goal", "l1: x = 0 & y = 1/2", "--bound", "1")
    assert code == 0 and obj["regions"]["l0"]


def test_coreach_needs_goal(capsys):
    assert run(capsys, "coreach", "fig1.rha", "--bound", "1")[0] == 64


def test_fixpoint_cap_is_inconclusive(capsys):
    code, _, err = run(capsys, "reach", "fig1.rha", "--bound", "3", "--cap", "2")
    assert code == 2 and "no stabilization" in err


def test_env_cap(capsys, monkeypatch):
    monkeypatch.setenv("RHA_ITER_CAP", "2")
    assert run(capsys, "reach", "fig1.rha", "--bound", "3")[0] == 2


def test_contract_random(capsys):
    code, obj = run_json(capsys, "contract", "fig1.rha", "--seed", "3", "--steps", "12")
    assert code == 0
    rep = obj["report"]
    assert rep["length_folded"] <= rep["length_before"] <= rep["length_after"]
    assert obj["input"]["duration"] == obj["contracted"]["duration"]


def test_regionize(capsys, tmp_path):
    out = tmp_path / "reg.rha"
    code, obj = run_json(capsys, "regionize", "fig1.rha", "--full", "--out", str(out))
    assert code == 0 and obj["locations"] == 98 == obj["location_bound"]
    reg = parse_file(out)
    assert len(reg.locations) == 98


def test_tm_compile(capsys, tmp_path):
    out = tmp_path / "tm.rha"
    code, obj = run_json(capsys, "tm-compile", str(MACHINES / "flip.tm"), "--word", "0", "--check", "--out", str(out))
    assert code == 0
    assert obj["verdict"] == "YES" and obj["simulated"] is True and obj["bound"] == "28"
    assert len(parse_file(out).locations) == obj["locations"]


def test_validate_json(capsys):
    code, obj = run_json(capsys, "validate", "gasburner.rha")
    assert code == 0 and obj["singular"] and obj["cmax"] == "30"


def test_golden(capsys):
    code, out, _ = run(capsys, "golden")
    assert code == 0 and out.startswith("TAP version 13") and "not ok" not in out
    code, obj = run_json(capsys, "golden")
    assert all(r["passed"] for r in obj)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["check", "fig1.rha", "--bound", "1"],
        ["check", "fig1.rha", "--goal", "nowhere", "--bound", "1"],
        ["check", "fig1.rha", "--goal", "l1", "--bound", "-1"],
        ["check", "missing.rha", "--goal", "l1", "--bound", "1"],
        ["tm-compile", "missing.tm", "--word", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 64


def test_parse_error_is_positioned(capsys, tmp_path):
    bad = tmp_path / "bad.rha"
    bad.write_text("var x, y;\ninit l;\nloc l { rate: x = 1, y = 1; }\nedge l -> l { guard: x - y <= 1; }\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 64
    assert f"{bad}:4:" in err and "diagonal constraints unsupported" in err


def test_internal_error_dump(capsys, monkeypatch):
    def boom(a):
        raise RuntimeError("invariant broken")

    monkeypatch.setattr(cli, "validate", boom)
    code, _, err = run(capsys, "validate", "fig1.rha")
    assert code == 70
    assert "internal error" in err and "argv:" in err and "RuntimeError: invariant broken" in err


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and out.strip() == "rha 0.1.0"


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "rha.cli", "validate", "fig1.rha"], capture_output=True, text=True)
    assert p.returncode == 0 and "singular: true" in p.stdout
