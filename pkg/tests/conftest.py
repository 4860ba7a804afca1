import numpy as np
import pytest

from jcsim.hilbert import HilbertDims
from jcsim.params import SystemParams

_REPORT: list[str] = []


@pytest.fixture
def base():
    """Resonant system with cavity decay 0.4, qubit decay 0.5 and g = 1."""
    return SystemParams(delta=0.0, g=1.0, kappa=0.4, gamma1=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def report():
    """Collects one PASS/FAIL line per acceptance criterion."""

    def add(label: str, ok: bool, detail: str = ""):
        _REPORT.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return add


def random_density(d, rng, rank=None):
    x = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def small(n_fock, **kw):
    return SystemParams(dims=HilbertDims(n_fock), **kw)


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
