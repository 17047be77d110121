import math

import pytest

from minsurf.catalog import make_surface
from minsurf.mesh import tessellate


@pytest.fixture(scope="session")
def catenoid():
    return make_surface("catenoid")


@pytest.fixture(scope="session")
def enneper():
    return make_surface("enneper")


@pytest.fixture(scope="session")
def catenoid_mesh(catenoid):
    return tessellate(catenoid, 64)


@pytest.fixture(scope="session")
def mkx_mesh():
    return tessellate(make_surface("mkx", {"k": 2, "alpha": math.pi / 4}), 48)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
