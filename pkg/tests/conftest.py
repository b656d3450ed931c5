import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qesat.formula import CnfFormula  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class ScriptedRng:
    """Stands in for ``np.random.Generator`` where only ``random(n)`` is used."""

    def __init__(self, *draws):
        self._draws = [np.asarray(d, dtype=float) for d in draws]

    def random(self, n):
        out = self._draws.pop(0)
        assert out.shape == (n,)
        return out


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def two_clause():
    # (x1 v x2) & (-x1 v x2)
    return CnfFormula.from_ints(2, [[1, 2], [-1, 2]])
