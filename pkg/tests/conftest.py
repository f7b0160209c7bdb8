import json
from pathlib import Path

import numpy as np
import pytest

ORACLES = json.loads((Path(__file__).parent / "oracles" / "values.json").read_text())
CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def oracle():
    return ORACLES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criteria(request):
    """Registry of acceptance outcomes: number -> (passed, title, detail, seconds)."""
    return request.config.stash.setdefault(CRITERIA, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    found = config.stash.get(CRITERIA, {})
    if not found:
        return
    terminalreporter.section("acceptance criteria")
    for num in range(1, max(14, max(found)) + 1):
        if num not in found:
            terminalreporter.write_line(f"criterion {num:2d} NOT RUN (deselected, or the test raised)")
            continue
        ok, title, detail, secs = found[num]
        terminalreporter.write_line(
            f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} ({secs:.1f} s)")
