"""Shared fixtures and the acceptance summary printed at the end of the run."""

import numpy as np
import pytest

from neutral_obsctrl import ConstantKernel, NeutralSystem, load_fixture

ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def example1():
    return load_fixture("example1")


@pytest.fixture(scope="session")
def example1_scalar():
    return load_fixture("example1_scalar")


@pytest.fixture(scope="session")
def example2():
    return load_fixture("example2")


@pytest.fixture(scope="session")
def scalar_a3():
    return load_fixture("scalar_a3")


def random_constant_kernel_system(rng, n, scale=0.3, p=None, m=None, D1=False):
    p = n if p is None else p
    m = n if m is None else m
    return NeutralSystem(
        A_minus1=0.8 * rng.standard_normal((n, n)),
        B=rng.standard_normal((n, m)),
        C=rng.standard_normal((p, n)),
        A2=ConstantKernel(scale * rng.standard_normal((n, n))),
        A3=ConstantKernel(scale * rng.standard_normal((n, n))),
        D1=scale * rng.standard_normal((n, n)) if D1 else None,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
