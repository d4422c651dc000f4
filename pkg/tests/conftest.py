import sys

import pytest

from hardylab.geometry import build_graded_mesh, make_tangent_ball


@pytest.fixture(scope="session")
def disk():
    return make_tangent_ball(2, 0.5)


@pytest.fixture(scope="session")
def mesh_coarse(disk):
    return build_graded_mesh(disk, 0.04, 2.0)


@pytest.fixture(scope="session")
def mesh(disk):
    return build_graded_mesh(disk, 0.02, 2.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
