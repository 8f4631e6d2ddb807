import itertools

import pytest

from rdcds.errors import InvalidParams
from rdcds.params import SystemParams, derive

ACCEPTANCE_LINES = []


def all_tuples(max_n, constrained_only=True):
    """Every valid (N, R_r, K_c, S) with K_c <= N <= max_n."""
    out = []
    for N in range(1, max_n + 1):
        for K_c, S, R_r in itertools.product(range(1, N + 1), range(0, N + 1), range(1, N + 1)):
            if constrained_only and S >= K_c:
                continue
            try:
                out.append(SystemParams(N, R_r, K_c, S))
            except InvalidParams:
                pass
    return out


def well_posed_tuples(max_n):
    return [p for p in all_tuples(max_n) if derive(p).well_posed]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def golden():
    return SystemParams(7, 5, 6, 2, 17)
