from __future__ import annotations

import os
import subprocess
import sys

import pytest

from rha import corpus
from rha.corpus import CASES, GoldenCase, run_all, run_golden


@pytest.mark.parametrize("case", CASES, ids=lambda c: c.name)
def test_golden_case(case):
    r = run_golden(case)
    assert r.passed, r.report()
    assert case.provenance in ("PAPER", "DERIVED", "TRIVIAL")


def test_failure_is_reported_not_raised():
    bad = GoldenCase("broken", "fig1.rha", "TRIVIAL", 1, lambda a: 1 / 0)
    r = run_golden(bad)
    assert not r.passed and "ZeroDivisionError" in r.report()
    wrong = GoldenCase("wrong", "fig1.rha", "TRIVIAL", 2, lambda a: 3)
    _, tap = run_all((wrong,))
    assert "not ok 1 - wrong" in tap and "expected 2, got 3" in tap


def test_tap_is_byte_stable():
    _, a = run_all()
    _, b = run_all()
    assert a == b and a.count("\nok ") == len(CASES)


@pytest.mark.parametrize("argv", [["golden"], ["reach", "fig1.rha", "--bound", "2", "--json"]])
def test_output_independent_of_hash_seed(argv):
    outs = set()
    for seed in ("0", "1", "12345"):
        env = {**os.environ, "PYTHONHASHSEED": seed}
        p = subprocess.run([sys.executable, "-m", "rha.cli", *argv], capture_output=True, env=env)
        assert p.returncode == 0
        outs.add(p.stdout)
    assert len(outs) == 1


def test_bundled_files_load():
    for name in corpus.FILES:
        a = corpus.load(name)
        assert a.locations and corpus.path(name).is_file()
    assert corpus.load("fig1") == corpus.load("fig1.rha")
