import os
from pathlib import Path

import pytest

from edem.config import DE, EDEM, RunConfig

# acceptance verdicts, collected for the end-of-session summary
VERDICTS: list[str] = []


def record_verdict(criterion: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    VERDICTS.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def small_de():
    return RunConfig(variant=DE, name="small_de", ticks=300, seeds=(0,))


@pytest.fixture
def small_edem():
    return RunConfig(variant=EDEM, name="small_edem", ticks=200, seeds=(0,), sigma_bar=0.15)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("EDEM_OUT_DIR", raising=False)
    return tmp_path / "out"
