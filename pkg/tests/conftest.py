import numpy as np
import pytest

from nhcalc import model_system


@pytest.fixture(scope="session")
def torus16():
    return model_system("torus_laplacian", 16)


@pytest.fixture(scope="session")
def dirichlet16():
    return model_system("dirichlet_laplacian", 16)


@pytest.fixture(scope="session")
def deriv16():
    return model_system("derivative_h", 16)


@pytest.fixture(params=["torus_laplacian", "dirichlet_laplacian", "derivative_h"])
def any_model(request):
    return model_system(request.param, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
