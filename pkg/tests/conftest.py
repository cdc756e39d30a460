import numpy as np
import pytest
from scipy.special import expit

from wateci.propensity import Dataset

ACCEPTANCE_LINES = []


def random_dataset(seed, n=500, strength=1.0, continuous=False):
    """Two confounders (one continuous around 50, one binary), binary or continuous Y."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(50.0, 5.0, n)
    x2 = rng.binomial(1, 0.5, n).astype(float)
    lin = strength * (0.04 * (x1 - 50.0) + 0.5 * (x2 - 0.5)) + rng.normal(0, 0.1)
    t = rng.binomial(1, expit(lin)).astype(float)
    mean = -0.5 + 0.1 * (x1 - 50.0) + 0.4 * x2 + 0.3 * t * x2
    if continuous:
        y = mean + rng.normal(0.0, 1.0, n)
    else:
        y = rng.binomial(1, expit(mean)).astype(float)
    return Dataset.from_arrays(np.column_stack([x1, x2]), t, y)


@pytest.fixture
def make_dataset():
    return random_dataset


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log():
    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record
