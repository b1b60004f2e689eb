import numpy as np
import pytest

from lookahead.config import preset
from lookahead.engine import DesignProblem


@pytest.fixture(scope="session")
def gap_config():
    return preset("gap")


@pytest.fixture(scope="session")
def visual_config():
    return preset("visual")


@pytest.fixture(scope="session")
def memory_config():
    return preset("memory")


@pytest.fixture(scope="session")
def gap_problem(gap_config):
    return gap_config.problem()


@pytest.fixture(scope="session")
def visual_problem(visual_config):
    return visual_config.problem()


@pytest.fixture(scope="session")
def memory_problem(memory_config):
    return memory_config.problem()


def binary_problem(p_success):
    """Problem from a (theta, design) table of success probabilities."""
    p = np.asarray(p_success, dtype=float)
    return DesignProblem(np.stack([1.0 - p, p], axis=2))


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
