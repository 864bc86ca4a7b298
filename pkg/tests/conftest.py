import warnings

import numpy as np
import pytest

from pathclass.lattice import GaussianPacketSpec, SpatialGrid, gaussian_packet
from pathclass.traversal import traversal_distribution

ACCEPTANCE_LINES = []


def report(criterion: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {criterion} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid(-80.0, 80.0, 2049)


@pytest.fixture(scope="session")
def packet(grid):
    return gaussian_packet(GaussianPacketSpec(x0=-20.0, k0=5.0, sigma_x=2.0), grid)


@pytest.fixture(scope="session")
def traversal(packet):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return traversal_distribution(packet, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
