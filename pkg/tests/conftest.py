import math

import numpy as np
import pytest

from flexarm import build_model, reference_beam
from flexarm.planning import Task


@pytest.fixture(scope="session")
def beam():
    return reference_beam()


@pytest.fixture(scope="session")
def model(beam):
    return build_model(beam)


@pytest.fixture(scope="session")
def coeffs(model):
    return model[1]


@pytest.fixture(scope="session")
def task(beam):
    """The reference move: hub -90 deg to 0, slider 0 to 1, 2 s."""
    return Task(theta_i=-math.pi / 2, theta_f=0.0, x_i=0.0, x_f=1.0, T_f=2.0 * beam.time_scale)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdicts, one line per criterion, after the run."""
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
