from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from elastocavity.forward import solve_dirichlet, solve_neumann  # noqa: E402
from elastocavity.geometry import CavityShape, generate_mesh  # noqa: E402
from elastocavity.medium import make_incidence, make_medium  # noqa: E402


@pytest.fixture(scope="session")
def unit_medium():
    return make_medium(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def oblique(unit_medium):
    return make_incidence(unit_medium, math.pi / 6)


@pytest.fixture(scope="session")
def semicircle():
    return CavityShape.semicircle()


@pytest.fixture(scope="session")
def coarse_mesh(semicircle):
    return generate_mesh(semicircle, 0.3)


@pytest.fixture(scope="session")
def medium_mesh(semicircle):
    return generate_mesh(semicircle, 0.15)


@pytest.fixture(scope="session")
def dirichlet_solution(unit_medium, oblique, medium_mesh):
    return solve_dirichlet(unit_medium, oblique, medium_mesh)


@pytest.fixture(scope="session")
def neumann_solution(unit_medium, oblique, medium_mesh):
    return solve_neumann(unit_medium, oblique, medium_mesh)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
