from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rha import corpus  # noqa: E402


@pytest.fixture
def fig1():
    return corpus.load("fig1")


@pytest.fixture
def gasburner():
    return corpus.load("gasburner")


@pytest.fixture
def bounded():
    return corpus.load("bounded")


MACHINES = Path(__file__).parent / "machines"
