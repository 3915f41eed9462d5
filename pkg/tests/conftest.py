import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def toy_ontology_path():
    return str(DATA / "toy_go.ofn")


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion under its number."""

    def record(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + \
            (f" ({detail})" if detail else "")
        ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
