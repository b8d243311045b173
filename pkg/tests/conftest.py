import numpy as np
import pytest
from hypothesis import strategies as st

from fatigue_bandit.model import ParamVector, ProblemInstance


@pytest.fixture
def worked():
    """Two-item worked instance with the N=3 extension's first two items."""
    return ProblemInstance([0.9, 0.5], [0.3, 0.6], abandon_prob=0.1, cost=0.5)


@pytest.fixture
def worked3():
    return ProblemInstance([0.9, 0.5, 0.2], [0.3, 0.6, 0.1], abandon_prob=0.1, cost=0.5)


unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def params_and_sequence(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    u = draw(st.lists(unit, min_size=n, max_size=n))
    r = draw(st.lists(unit, min_size=n, max_size=n))
    q = draw(unit)
    c = draw(unit)
    seq = tuple(draw(st.permutations(range(n)))[: draw(st.integers(0, n))])
    return ParamVector(np.array(u), q), np.array(r), c, seq


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number: int, name: str, passed: bool, detail: str):
        _CRITERIA.append(f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'} - {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
