"""Shared fixtures and the acceptance-line reporter."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# One line per acceptance criterion, echoed in the terminal summary so a
# plain `pytest` run always shows the pass/fail status of each criterion.
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def _report(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng_factory():
    from proxlmc import RngStream

    return RngStream


@pytest.fixture
def box_quadratic():
    """Small strongly convex quadratic plus box, handy for sampler tests."""
    from proxlmc import BoxIndicator, Quadratic

    h = np.array([[2.0, 0.3], [0.3, 1.0]])
    smooth = Quadratic(h, np.array([0.2, -0.1]))
    nonsmooth = BoxIndicator(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return smooth, nonsmooth
