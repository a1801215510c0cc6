from __future__ import annotations

import numpy as np
import pytest

from morseflow.builtins import get_builtin
from morseflow.flow import Flow

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] criterion {number:2d}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def quadratic():
    return get_builtin("quadratic")


@pytest.fixture(scope="session")
def saddle_flow():
    b = get_builtin("hyperbolic:1:2")
    return Flow(b.model, b.field())


@pytest.fixture(scope="session")
def plane_flow():
    b = get_builtin("punctured_plane")
    return Flow(b.model, b.field())


@pytest.fixture(scope="session")
def circle_flow():
    b = get_builtin("sphere:1")
    return Flow(b.model, b.field())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
