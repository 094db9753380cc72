import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alp.spectral import Grid, forward_transform

settings.register_profile(
    "alp", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("alp")


def random_samples(shape, seed=0, comps=None):
    rng = np.random.default_rng(seed)
    full = shape if comps is None else (comps,) + tuple(shape)
    return rng.standard_normal(full)


def mode(grid, k, amp=1.0, kind="cos"):
    """Samples of ``amp * cos(k . x)`` (or sin) broadcast to the grid."""
    x1, x2, x3 = grid.coordinates()
    arg = k[0] * x1 + k[1] * x2 + k[2] * x3
    f = np.cos if kind == "cos" else np.sin
    return np.broadcast_to(amp * f(arg), grid.shape).copy()


def mode_field(grid, k, amp=1.0, kind="cos"):
    return forward_transform(mode(grid, k, amp, kind), grid)


@pytest.fixture
def g8():
    return Grid.cube(8)


@pytest.fixture
def g16():
    return Grid.cube(16)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
