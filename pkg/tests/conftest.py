import numpy as np
import pytest

from ncwave.core import Grid, Harmonic, PhysicsParams

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""
    def _report(label, passed, detail):
        _ACCEPTANCE.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid1d():
    return Grid(-20.0, 20.0, 512)


@pytest.fixture
def harmonic():
    return Harmonic(1.0)


@pytest.fixture
def params():
    return PhysicsParams()
