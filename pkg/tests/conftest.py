import numpy as np
import pytest

from keyfnns import synthetic
from keyfnns.fnn import build_seeded
from keyfnns.keystream import StegoKey
from keyfnns.periodic import build_periodic


@pytest.fixture(scope="session")
def seeded_decoder():
    return build_seeded(StegoKey.from_int(3), 1)


@pytest.fixture(scope="session")
def periodic_decoder():
    return build_periodic()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_cover():
    return synthetic.natural_image(5, 32)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
