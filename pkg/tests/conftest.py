import numpy as np
import pytest

from pexcite.signals import TimeGrid, constant, pathological_pair, sample_sinusoid_mix, stack

_labels = {}
_outcomes = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _labels[item.nodeid] = mark.args[0] if mark.args else item.name


def pytest_runtest_logreport(report):
    if report.nodeid not in _labels:
        return
    if report.failed:
        _outcomes[report.nodeid] = "FAIL"
    elif report.when == "call" and report.nodeid not in _outcomes:
        _outcomes[report.nodeid] = "PASS" if report.passed else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _labels.items():
        if nodeid in _outcomes:
            terminalreporter.write_line(f"{_outcomes[nodeid]:4s}  {label}")


@pytest.fixture(scope="session")
def sincos():
    """(sin t, cos t) on a grid where 2*pi is a whole number of steps."""
    grid = TimeGrid(0.0, 2 * np.pi / 6283, 6283 * 8 + 1)
    return sample_sinusoid_mix([1, 1], [1, 1], [0, np.pi / 2], 2, np.eye(2), grid)


@pytest.fixture(scope="session")
def cross254():
    """The switching pair (gamma, 1 - gamma) on [0, 254], intervals k = 1..7."""
    grid = TimeGrid.from_horizon(254, 1e-3)
    w1, w2 = pathological_pair(constant([1.0], grid))
    return stack(w1, w2)
