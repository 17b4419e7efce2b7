import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def run_cfg():
    from nvdit.config import load_config

    return load_config()


@pytest.fixture(scope="session")
def table20():
    from nvdit.structure import level_table

    return level_table(b_z=0.020)


@pytest.fixture(scope="session")
def model10():
    from nvdit.protocol import readout_model

    return readout_model(10.0)


@pytest.fixture(scope="session")
def fig7_rep(run_cfg):
    from nvdit.reproduce import fig7

    return fig7(run_cfg)


@pytest.fixture(scope="session")
def fig8_rep(run_cfg):
    from nvdit.reproduce import fig8

    return fig8(run_cfg)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
