import numpy as np
import pytest

from coarray_doa import build_dictionary, build_geometry, build_grid


def brute_lags(positions):
    """Distinct pairwise differences, computed without the Kronecker machinery."""
    return sorted({a - b for a in positions for b in positions})


@pytest.fixture(scope="session")
def snaq2():
    return build_geometry("SNAQ2", 8)


@pytest.fixture(scope="session")
def grid1024():
    return build_grid(1024)


@pytest.fixture(scope="session")
def snaq2_dict(snaq2, grid1024):
    return build_dictionary(snaq2, snaq2.index, grid1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_report():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail}")
