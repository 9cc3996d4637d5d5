import pytest

from qsl.lattice import LatticeSpec
from qsl.potential import PotentialSpec, materialize
from qsl.spectrum import find_eigenvalues

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def lat():
    return LatticeSpec(0.8, -30, 50)


@pytest.fixture(scope="session")
def u(lat):
    return materialize(PotentialSpec.power(1.0, 2.0), lat)


@pytest.fixture(scope="session")
def spectrum20(u):
    return find_eigenvalues(0.1, 20.0, 512, 1e-10, u)


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def _record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
