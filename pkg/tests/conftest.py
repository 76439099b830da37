import itertools
from pathlib import Path

import numpy as np
import pytest

from rightsmark.imaging import load_png
from rightsmark.pipeline import payload_bits

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
# ledger block hash used as a stand-in payload where no ledger is involved
SAMPLE_HASH = "3f" * 32


@pytest.fixture(scope="session")
def astronaut():
    return load_png(DATA / "astronaut.png")


@pytest.fixture(scope="session")
def camera():
    return load_png(DATA / "camera.png")


@pytest.fixture(scope="session")
def moon():
    return load_png(DATA / "moon.png")


@pytest.fixture(scope="session")
def qr_bits():
    return payload_bits(SAMPLE_HASH)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def fixed_clock():
    ticks = itertools.count(1_700_000_000)
    return lambda: next(ticks)


# ---- acceptance reporting ----

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
_SESSION = {}
SUITE_BUDGET_S = 60.0


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_sessionstart(session):
    import time

    _SESSION["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    elapsed = time.perf_counter() - _SESSION["start"]
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(f"criterion 12 (suite runtime): {'PASS' if ok else 'FAIL'}  {elapsed:.1f} s, budget {SUITE_BUDGET_S:.0f} s")
