"""Shared fixtures and the acceptance report summary hook."""

import time
from types import SimpleNamespace

import pytest

from pinnacle_lab.lattice import ModelParams
from pinnacle_lab.oracle import enumerate_ensemble

_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oracle_3x3_beta1_timed():
    """Exact 3x3, K = 3, p = 2, beta = 1 table plus its build time (the
    sampler exactness criterion charges the enumeration to its runtime)."""
    t0 = time.time()
    ensemble = enumerate_ensemble(3, 3, ModelParams(p=2.0, beta=1.0))
    return SimpleNamespace(ensemble=ensemble, seconds=time.time() - t0)


@pytest.fixture(scope="session")
def oracle_3x3_beta1(oracle_3x3_beta1_timed):
    return oracle_3x3_beta1_timed.ensemble
