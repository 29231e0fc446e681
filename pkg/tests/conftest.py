import numpy as np
import pytest

from fillings import generators as gen
from fillings.geodesic import boundary_distance_matrix
from fillings.special import SampleFields


@pytest.fixture(scope="session")
def disc5():
    return gen.flat_disc(level=5)


@pytest.fixture(scope="session")
def cap5():
    return gen.spherical_cap(level=5)


@pytest.fixture(scope="session")
def d0_disc5(disc5):
    return boundary_distance_matrix(disc5, None, 4)


@pytest.fixture(scope="session")
def dM_cap5(cap5):
    return boundary_distance_matrix(cap5, None, 4)


@pytest.fixture(scope="session")
def torus3():
    return gen.torus_with_hole(level=3)


@pytest.fixture(scope="session")
def genus2_3():
    return gen.genus2_with_hole(level=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


#: (criterion, passed, detail) lines filled in by test_acceptance.py
ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(num: int, name: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail}"
        ACCEPTANCE.append((num, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
