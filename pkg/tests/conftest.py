import numpy as np
import pytest

from mixpce import oracles
from mixpce.gmm import random_mixture, rng_from_seed

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Print and remember one ``CRITERION k: PASS|FAIL ...`` line."""

    def record(number, ok, detail):
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


@pytest.fixture(scope="session")
def synth():
    """The d=8, p=3 synthetic problem (basis built once per session)."""
    return oracles.synthetic8d(0)


@pytest.fixture
def mix3():
    def make(d, seed=0, r=3):
        return random_mixture(d, r, rng_from_seed(seed))

    return make


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
