from __future__ import annotations

import numpy as np
import pytest

from ghzpassage.model import SystemParams
from ghzpassage.dynamics import propagate_schrodinger

_acceptance: list[tuple[str, str, list]] = []


@pytest.fixture(scope="session")
def default_params() -> SystemParams:
    return SystemParams()


@pytest.fixture(scope="session")
def fig3_trajectory(default_params):
    """Pure-state run to g t = 170, started before the pulses, sampled every 0.5/g."""
    return propagate_schrodinger(None, default_params, t_end=170.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance.append((name, report.outcome, list(report.user_properties)))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, outcome, props in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        measured = ", ".join(f"{k}={v}" for k, v in props)
        tr.write_line(f"{verdict}  {name}" + (f"  [{measured}]" if measured else ""))
