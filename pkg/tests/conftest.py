import numpy as np
import pytest

from collres.collision_map import ParticleDensity, build_map
from collres.scattering import qubit_model

BETA = 0.1
GIBBS_GROUND = 1 / (1 + np.exp(-0.06))  # 0.514996, delta = 0.6, beta = 0.1


@pytest.fixture(scope="session")
def model():
    return qubit_model()


@pytest.fixture(scope="session")
def particle():
    return ParticleDensity()


@pytest.fixture(scope="session")
def approx_map(model, particle):
    return build_map(model, particle, "approx")


@pytest.fixture(scope="session")
def exact_map(model, particle):
    return build_map(model, particle, "exact")


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, d, scale=1.0):
    a = scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return 0.5 * (a + a.conj().T)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the end-of-run report."""

    def record(number, ok, detail):
        _CRITERIA[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
