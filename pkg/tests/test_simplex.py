from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from lscover.simplex import Unbounded, simplex_max


def test_textbook_lp():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
    C = np.array([[1, 0], [0, 2], [3, 2]])
    res = simplex_max(C, np.array([4, 12, 18]), np.array([3, 5]))
    assert res.objective == pytest.approx(36)
    assert res.y == pytest.approx([2, 6])
    exact = simplex_max(C, np.array([4, 12, 18]), np.array([3, 5]), exact=True)
    assert exact.objective == Fraction(36)
    # complementary prices solve the dual
    assert float(np.dot(exact.prices, [4, 12, 18])) == 36


def test_unbounded():
    with pytest.raises(Unbounded):
        simplex_max(np.array([[1, -1]]), np.array([1]), np.array([1, 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_matches_scipy_on_random_packing_lps(m, n, seed):
    g = np.random.default_rng(seed)
    C = g.integers(0, 4, size=(m, n)).astype(float)
    C[:, C.sum(axis=0) == 0] = 1.0
    b = g.integers(1, 6, size=m).astype(float)
    c = g.integers(0, 5, size=n).astype(float)
    ref = linprog(-c, A_ub=C, b_ub=b, bounds=(0, None), method="highs")
    res = simplex_max(C, b, c)
    assert res.objective == pytest.approx(-ref.fun, abs=1e-9)
    assert np.all(C @ res.y <= b + 1e-9)
    ex = simplex_max(C.astype(int), b.astype(int), c.astype(int), exact=True)
    assert float(ex.objective) == pytest.approx(-ref.fun, abs=1e-9)
