"""Lemke-Howson path following in exact integer arithmetic.

Payoffs are converted to exact rationals (every double is one), shifted to be
positive and scaled to integers.  The two tableaux are

    B'x + s = 1   (labels: x_i -> i,     s_j -> m + j)
    A y + r = 1   (labels: y_j -> m + j, r_i -> i)

and are pivoted fraction-free: each tableau carries the previous pivot as a
common denominator, so every division is exact.  Ties in the ratio test are
broken lexicographically against the columns of the initial slack basis,
which keeps the path well defined on degenerate games.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

import numpy as np

from rgtestbed.games import Game


class DegenerateGameError(RuntimeError):
    """Raised when a path exceeds its pivot budget."""


class _Tableau:
    def __init__(self, M: list[list[int]], n_vars: int, first_label_of_var, first_label_of_slack):
        # M is rows x n_vars; the tableau is [M | I | 1]
        self.rows = len(M)
        self.n_vars = n_vars
        self.width = n_vars + self.rows + 1
        self.T = []
        for i, row in enumerate(M):
            line = list(row) + [0] * self.rows + [1]
            line[n_vars + i] = 1
            self.T.append(line)
        self.det = 1
        # column index -> label
        self.label_of_col = [first_label_of_var + c for c in range(n_vars)] + [
            first_label_of_slack + r for r in range(self.rows)
        ]
        self.col_of_label = {lab: c for c, lab in enumerate(self.label_of_col)}
        self.basis = [n_vars + r for r in range(self.rows)]

    def _lex_less(self, i: int, k: int, col: int) -> bool:
        """Row i's lexicographic ratio vector is smaller than row k's."""
        ti, tk = self.T[i], self.T[k]
        a, b = ti[col], tk[col]
        order = [self.width - 1] + list(range(self.n_vars, self.n_vars + self.rows))
        for c in order:
            lhs = ti[c] * b
            rhs = tk[c] * a
            if lhs != rhs:
                return lhs < rhs
        return False

    def pivot_in(self, label: int) -> int:
        """Bring the variable with ``label`` into the basis; return the leaving label."""
        col = self.col_of_label[label]
        leave = -1
        for i in range(self.rows):
            if self.T[i][col] > 0 and (leave < 0 or self._lex_less(i, leave, col)):
                leave = i
        if leave < 0:
            raise DegenerateGameError("ratio test found no leaving variable")
        out_label = self.label_of_col[self.basis[leave]]
        prow = self.T[leave]
        p = prow[col]
        det = self.det
        for i in range(self.rows):
            if i == leave:
                continue
            row = self.T[i]
            f = row[col]
            self.T[i] = [(x * p - f * y) // det for x, y in zip(row, prow)]
        self.det = p
        self.basis[leave] = col
        return out_label

    def values(self) -> list[Fraction]:
        """Values of the structural variables in the current basis."""
        out = [Fraction(0)] * self.n_vars
        for i, c in enumerate(self.basis):
            if c < self.n_vars:
                out[c] = Fraction(self.T[i][-1], self.det)
        return out


def _integer_matrix(M: np.ndarray) -> list[list[int]]:
    F = [[Fraction(float(x)) for x in row] for row in M]
    lo = min(min(row) for row in F)
    shifted = [[x - lo + 1 for x in row] for row in F]
    scale = 1
    for row in shifted:
        for x in row:
            scale = lcm(scale, x.denominator)
    return [[int(x * scale) for x in row] for row in shifted]


def lemke_howson_exact(u1, u2, initial_label: int = 0, max_pivots: int | None = None):
    """One equilibrium as exact rational strategy vectors."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    m, n = u1.shape
    if not 0 <= initial_label < m + n:
        raise ValueError(f"initial label must be in [0, {m + n}), got {initial_label}")
    A = _integer_matrix(u1)
    B = _integer_matrix(u2)
    BT = [[B[i][j] for i in range(m)] for j in range(n)]
    tx = _Tableau(BT, m, 0, m)  # x_i has label i, slack s_j has label m + j
    ty = _Tableau(A, n, m, 0)  # y_j has label m + j, slack r_i has label i
    if max_pivots is None:
        max_pivots = 50 * (m + n) ** 2 + 1000

    # x_k lives in the x tableau; y_j in the y tableau
    current = tx if initial_label < m else ty
    entering = initial_label
    for _ in range(max_pivots):
        leaving = current.pivot_in(entering)
        if leaving == initial_label:
            break
        current = ty if current is tx else tx
        entering = leaving
    else:
        raise DegenerateGameError(f"no equilibrium within {max_pivots} pivots")

    x = tx.values()
    y = ty.values()
    sx, sy = sum(x), sum(y)
    if sx == 0 or sy == 0:
        raise DegenerateGameError("path ended at the artificial equilibrium")
    return [v / sx for v in x], [v / sy for v in y]


def lemke_howson(g: Game, initial_label: int = 0):
    """One Nash equilibrium of ``g`` as float strategy vectors (s1, s2)."""
    x, y = lemke_howson_exact(g.u1, g.u2, initial_label)
    return np.array([float(v) for v in x]), np.array([float(v) for v in y])
