import json
import math
from pathlib import Path

import pytest

from ppslt.config import load_config

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def crystal(cfg):
    return cfg.crystal


@pytest.fixture(scope="session")
def raw_crystal(cfg):
    return cfg.crystal.with_offset(0.0)


@pytest.fixture(scope="session")
def pump(cfg):
    return cfg.pump


@pytest.fixture(scope="session")
def theta():
    return math.radians(1.7)


@pytest.fixture(scope="session")
def golden():
    return json.loads((FIXTURES / "golden.json").read_text(encoding="utf-8"))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} -- {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
