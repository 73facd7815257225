import pathlib

import pytest

from prismal.cli import golden_connections, load_chart
from prismal.scalars import PrecisionProfile

ROOT = pathlib.Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

# acceptance lines collected by test_acceptance.py, printed at the end of the run
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def golden():
    return load_chart(DATA / "golden.json")


@pytest.fixture(scope="session")
def golden_conns(golden):
    return golden_connections(golden.ring)


@pytest.fixture
def small():
    return PrecisionProfile(2, 16, 8, W=6)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
