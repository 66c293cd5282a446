import os
from pathlib import Path

import numpy as np
import pytest

from hyprigid.coordinate_forms import measured_order

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(ACCEPTANCE, []), key=lambda s: int(s.split()[0][2:]))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Print and collect one ``ACk PASS|FAIL detail`` line, then assert."""
    def emit(label, ok, detail):
        line = f"{label} {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        request.config.stash[ACCEPTANCE].append(line)
        assert ok, line
    return emit


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def order(errors, ratio=2.0):
    return measured_order(errors, ratio)


def sample_ball(rng, count, m, radius):
    pts = rng.normal(size=(count, m))
    pts *= (radius * rng.uniform(0.2, 1.0, size=(count, 1))) / np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def golden():
    """Compare text with ``tests/golden/<name>``; ``HYPRIGID_REGEN_GOLDEN=1`` rewrites it."""
    def check(name, text):
        path = GOLDEN / name
        if os.environ.get("HYPRIGID_REGEN_GOLDEN") == "1":
            path.parent.mkdir(exist_ok=True)
            path.write_text(text)
        assert path.read_text() == text
    return check
