import numpy as np
import pytest
from hypothesis import settings

from hardy_moser.extremal import SolverOptions, maximize_subcritical
from hardy_moser.forms import assemble_forms
from hardy_moser.radial import build_grid

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid():
    return build_grid()


@pytest.fixture(scope="session")
def forms(grid):
    return assemble_forms(grid)


@pytest.fixture(scope="session")
def lambda1(forms):
    return forms.lambda1


@pytest.fixture(scope="session")
def small_forms():
    return assemble_forms(build_grid(200))


@pytest.fixture(scope="session")
def blowup_sweep(forms):
    """Maximizers along gamma in {3, 3.5, 3.9} pi at alpha = 0 (shared, ~1 s)."""
    opts = SolverOptions()
    return [maximize_subcritical(g * np.pi, 0.0, forms, opts) for g in (3.0, 3.5, 3.9)]
