import math

import pytest

from conicheat.cross_section import ConeGeometry


@pytest.fixture(scope="session")
def flat_cone():
    """Cone over a circle of length 3 pi / 2 (a flat cone with a conic tip)."""
    return ConeGeometry.circle(1.5 * math.pi)


@pytest.fixture(scope="session")
def plane():
    """R^2 as the cone over the circle of length 2 pi."""
    return ConeGeometry.circle(2 * math.pi)


@pytest.fixture(scope="session")
def space3():
    """R^3 as the cone over the unit 2-sphere."""
    return ConeGeometry.sphere(2)


@pytest.fixture(scope="session")
def curved3():
    """Cone over a 2-sphere of radius 0.8 (n = 3, curved cross-section)."""
    return ConeGeometry.sphere(2, radius=0.8)


@pytest.fixture(scope="session")
def curved4():
    """Cone over a 3-sphere of radius 0.8 (n = 4, nonzero top heat coefficient)."""
    return ConeGeometry.sphere(3, radius=0.8)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_results():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
