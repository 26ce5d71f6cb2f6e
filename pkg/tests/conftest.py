import numpy as np
import pytest

from twoscale.harness import cached_mesh
from twoscale.mesh import DomainSpec, square_grid_mesh
from twoscale.operator import build_context


@pytest.fixture(scope="session")
def disk():
    return DomainSpec.disk()


@pytest.fixture(scope="session")
def mesh8(disk):
    return cached_mesh(disk, 1 / 8, 0)


@pytest.fixture(scope="session")
def mesh16(disk):
    return cached_mesh(disk, 1 / 16, 0)


@pytest.fixture(scope="session")
def ctx8(mesh8):
    return build_context(mesh8, mesh8.h ** 0.5, mesh8.h ** 0.5)


@pytest.fixture(scope="session")
def ctx16(mesh16):
    return build_context(mesh16, mesh16.h ** 0.5, mesh16.h ** 0.5)


@pytest.fixture(scope="session")
def grid():
    return square_grid_mesh(8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def half_sq(x):
    return 0.5 * np.sum(np.asarray(x) ** 2, axis=-1)


def affine(x):
    x = np.asarray(x)
    return 0.3 - 1.2 * x[..., 0] + 0.7 * x[..., 1]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
