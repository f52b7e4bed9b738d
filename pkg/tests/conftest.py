from __future__ import annotations

import heapq
import itertools
from fractions import Fraction

import numpy as np
import pytest

from rgtestbed.games import Game

MATCHING_PENNIES = Game([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]])
COORDINATION = Game([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
PD = Game([[0.6, 0.0], [1.0, 0.2]], [[0.6, 1.0], [0.0, 0.2]])
DISPERSION = Game([[0.0, 1.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]])


def random_game(rng: np.random.Generator, m: int, n: int) -> Game:
    return Game(rng.uniform(0, 1, (m, n)), rng.uniform(0, 1, (m, n)))


def exact_support_enumeration(u1, u2) -> list[tuple[np.ndarray, np.ndarray]]:
    """Equal-size support enumeration in exact rational arithmetic.

    Independent of the package solvers; valid for nondegenerate games.
    """
    A = [[Fraction(x) for x in row] for row in np.asarray(u1, dtype=float)]
    B = [[Fraction(x) for x in row] for row in np.asarray(u2, dtype=float)]
    m, n = len(A), len(A[0])
    out = []
    for k in range(1, min(m, n) + 1):
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                # column mix y over J makes rows in I indifferent; row mix x over I likewise
                y = _indifference([[A[i][j] for j in J] for i in I])
                x = _indifference([[B[i][j] for i in I] for j in J])
                if y is None or x is None:
                    continue
                ys = [Fraction(0)] * n
                xs = [Fraction(0)] * m
                for jj, j in enumerate(J):
                    ys[j] = y[jj]
                for ii, i in enumerate(I):
                    xs[i] = x[ii]
                rows = [sum(A[i][j] * ys[j] for j in range(n)) for i in range(m)]
                cols = [sum(B[i][j] * xs[i] for i in range(m)) for j in range(n)]
                if max(rows) > rows[I[0]] or max(cols) > cols[J[0]]:
                    continue
                out.append((np.array([float(v) for v in xs]), np.array([float(v) for v in ys])))
    return out


def _indifference(M):
    """Probability vector p > 0 with M p constant, or None."""
    k = len(M)
    # unknowns p_0..p_{k-1}, v: sum_j M[i][j] p_j - v = 0, sum p = 1
    rows = [list(M[i]) + [Fraction(-1)] + [Fraction(0)] for i in range(k)]
    rows.append([Fraction(1)] * k + [Fraction(0), Fraction(1)])
    N = k + 1
    for c in range(N):
        piv = next((r for r in range(c, N) if rows[r][c] != 0), None)
        if piv is None:
            return None
        rows[c], rows[piv] = rows[piv], rows[c]
        for r in range(N):
            if r != c and rows[r][c] != 0:
                f = rows[r][c] / rows[c][c]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[c])]
    p = [rows[i][N] / rows[i][i] for i in range(k)]
    if any(v <= 0 for v in p):
        return None
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def nearest_grid_point(v: np.ndarray, units: int) -> np.ndarray:
    """Exact l2-nearest point of {k / units : k >= 0 integer, sum k = units}.

    The objective is separable and convex in each k_i, so handing out the
    units one at a time to the cheapest marginal increase is optimal.
    """
    target = v * units
    k = np.zeros(v.size, dtype=np.int64)
    heap = [((1 - 2 * target[i]), i) for i in range(v.size)]
    heapq.heapify(heap)
    for _ in range(units):
        _, i = heapq.heappop(heap)
        k[i] += 1
        heapq.heappush(heap, ((2 * k[i] + 1 - 2 * target[i]), i))
    return k / units
