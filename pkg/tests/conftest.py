import sys

import pytest

from tactile_hardness.sim import SimConfig


@pytest.fixture
def quiet():
    """Default simulator with noise switched off."""
    return SimConfig(noise_sigma=0.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
