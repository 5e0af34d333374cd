"""End-to-end acceptance checks; each prints one PASS/FAIL line (run with ``-s`` to see them)."""
import pytest

from lscover.acceptance import CRITERIA, format_line, run_criterion
from lscover.rng import set_threads


@pytest.fixture(autouse=True)
def single_thread():
    set_threads(1)
    yield
    set_threads(1)


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i):
    name, ok, detail = run_criterion(i, seed=0)
    print(format_line(i, name, ok, detail))
    assert ok, detail
