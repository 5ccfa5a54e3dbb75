"""Shared fixtures: the built-in scenario runs are expensive enough that the
suite computes each trajectory once per session and reuses it everywhere.

The acceptance tests additionally register a one-line verdict per criterion;
those lines are printed in a terminal section after the run so the overall
result is readable without scrolling through tracebacks.
"""
import numpy as np
import pytest

from flexsat.scenarios import get_builtin
from flexsat.simulation import ActuatorModel, simulate

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(num: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[num] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[num]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict} - {detail}")


def run_builtin(name: str, actuator: ActuatorModel | None = None, **overrides):
    s = get_builtin(name)
    if actuator is not None or overrides:
        s = s.with_overrides(actuator=actuator, **overrides)
    return simulate(s.plant, s.controller, s.actuator, s.x0, s.sim)


@pytest.fixture(scope="session")
def c1_traj():
    return run_builtin("C1")


@pytest.fixture(scope="session")
def c2_traj():
    return run_builtin("C2")


@pytest.fixture(scope="session")
def c3_ideal_traj():
    return run_builtin("C3")


@pytest.fixture(scope="session")
def c3_deadzone_traj():
    return run_builtin("C3", actuator=ActuatorModel(kind="deadzone", threshold=0.12))


@pytest.fixture(scope="session")
def int_traj():
    return run_builtin("INT")


@pytest.fixture(scope="session")
def pi_traj():
    return run_builtin("PI")


@pytest.fixture(scope="session")
def openloop_traj():
    return run_builtin("OPENLOOP")


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
