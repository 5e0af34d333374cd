"""Dense tableau simplex for ``max c.y  s.t.  C y <= b, y >= 0`` with ``b >= 0``.

Because ``b >= 0`` the all-slack basis is feasible and no phase one is
needed.  Pivoting follows Bland's rule, which cannot cycle.  With
``exact=True`` the tableau holds :class:`fractions.Fraction` entries and every
comparison is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CoverError


class Unbounded(CoverError):
    pass


@dataclass
class SimplexResult:
    objective: object
    y: np.ndarray          # primal solution of the max problem
    prices: np.ndarray     # optimal dual values, one per row of C
    pivots: int


def simplex_max(C, b, c, exact: bool = False, eps: float = 1e-11, max_pivots: int | None = None) -> SimplexResult:
    C = np.asarray(C)
    m, k = C.shape
    if exact:
        conv = np.vectorize(Fraction, otypes=[object])
        T = np.empty((m + 1, k + m + 1), dtype=object)
        T[:m, :k] = conv(C)
        T[:m, k:k + m] = conv(np.eye(m, dtype=int))
        T[:m, -1] = conv(np.asarray(b))
        T[m, :k] = conv(np.asarray(c))
        T[m, k:] = Fraction(0)
        eps = 0
    else:
        T = np.zeros((m + 1, k + m + 1))
        T[:m, :k] = C
        T[:m, k:k + m] = np.eye(m)
        T[:m, -1] = b
        T[m, :k] = c
    if np.any(T[:m, -1] < 0):
        raise ValueError("right-hand side must be nonnegative")

    basis = list(range(k, k + m))
    limit = max_pivots or 50 * (m + k) + 1000
    pivots = 0
    while True:
        reduced = T[m, :-1]
        enter = np.flatnonzero(reduced > eps)
        if enter.size == 0:
            break
        col = int(enter[0])  # Bland: lowest index with positive reduced cost
        column = T[:m, col]
        rows = np.flatnonzero(column > eps)
        if rows.size == 0:
            raise Unbounded("objective unbounded")
        ratios = T[rows, -1] / column[rows]
        best = min(ratios)
        tied = rows[np.array([r == best for r in ratios]) if exact else ratios <= best + eps * (1 + abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
        if pivots > limit:
            raise CoverError(f"simplex exceeded {limit} pivots")

    y = np.zeros(k, dtype=object if exact else float)
    if exact:
        y[:] = Fraction(0)
    for r, var in enumerate(basis):
        if var < k:
            y[var] = T[r, -1]
    prices = -T[m, k:k + m]
    objective = -T[m, -1]
    return SimplexResult(objective=objective, y=y, prices=prices, pivots=pivots)


def _pivot(T, row, col):
    T[row] = T[row] / T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0
    nz = np.flatnonzero(factors != 0)
    if nz.size:
        T[nz] -= np.outer(factors[nz], T[row])
