"""Maxmin strategies and iterated dominance removal.

Both rest on one dense primal simplex.  For a payoff matrix ``A`` (rows are
the maximizer's actions) shifted so every entry is at least 1, the column
player's scaled problem

    maximize 1'y  subject to  A y <= 1,  y >= 0

starts feasible at the origin, so no phase one is needed.  At the optimum the
game value is ``1 / 1'y`` and the maximizer's strategy is read off the duals
(the objective-row entries of the slack columns).  Entering variables follow
Bland's rule; feasibility tolerance is 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rgtestbed._jit import njit
from rgtestbed.games import Game

LP_TOL = 1e-9
DOMINANCE_MARGIN = 1e-9


class LPError(RuntimeError):
    pass


@njit(cache=True)
def _maxmin_kernel(A):
    m, n = A.shape
    shift = 1.0 - A.min()
    width = n + m + 1
    T = np.zeros((m + 1, width))
    for i in range(m):
        for j in range(n):
            T[i, j] = A[i, j] + shift
        T[i, n + i] = 1.0
        T[i, width - 1] = 1.0
    for j in range(n):
        T[m, j] = -1.0
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = n + i

    ok = False
    for _ in range(50 * (m + n) + 100):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -LP_TOL:
                enter = j
                break
        if enter < 0:
            ok = True
            break
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > LP_TOL:
                r = T[i, width - 1] / a
                if r < best or (r == best and basis[i] < basis[leave]):
                    best = r
                    leave = i
        if leave < 0:
            # unbounded cannot happen for a positive matrix
            break
        piv = T[leave, enter]
        for j in range(width):
            T[leave, j] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(width):
                        T[i, j] -= f * T[leave, j]
        basis[leave] = enter

    total = T[m, width - 1]
    v = 1.0 / total
    x = np.empty(m)
    s = 0.0
    for i in range(m):
        xi = T[m, n + i]
        if xi < 0.0:
            xi = 0.0
        x[i] = xi
        s += xi
    for i in range(m):
        x[i] /= s
    return x, v - shift, ok


@njit(cache=True)
def _dominated(U, i, rows_alive, cols_alive):
    """Is row ``i`` strictly dominated by a mixture of the other live rows?"""
    k = 0
    for r in range(U.shape[0]):
        if rows_alive[r] and r != i:
            k += 1
    if k == 0:
        return False
    c = 0
    for j in range(U.shape[1]):
        if cols_alive[j]:
            c += 1
    D = np.empty((k, c))
    a = 0
    for r in range(U.shape[0]):
        if rows_alive[r] and r != i:
            b = 0
            for j in range(U.shape[1]):
                if cols_alive[j]:
                    D[a, b] = U[r, j] - U[i, j]
                    b += 1
            a += 1
    _, value, _ = _maxmin_kernel(D)
    return value > DOMINANCE_MARGIN


@njit(cache=True)
def _idr_kernel(U1, U2):
    m, n = U1.shape
    rows = np.ones(m, dtype=np.bool_)
    cols = np.ones(n, dtype=np.bool_)
    # row player's removals test U1; the column player's test U2 transposed
    U2T = U2.T.copy()
    changed = True
    while changed:
        changed = False
        for i in range(m):
            if rows[i] and _dominated(U1, i, rows, cols):
                rows[i] = False
                changed = True
        for j in range(n):
            if cols[j] and _dominated(U2T, j, cols, rows):
                cols[j] = False
                changed = True
    return rows, cols


@njit(cache=True)
def _idr_maxmin_kernel(Q):
    """IDR on the zero-sum game (Q, -Q), then the maxmin of what is left."""
    rows, cols = _idr_kernel(Q, -Q)
    m = 0
    for i in range(rows.size):
        if rows[i]:
            m += 1
    n = 0
    for j in range(cols.size):
        if cols[j]:
            n += 1
    R = np.empty((m, n))
    a = 0
    for i in range(rows.size):
        if rows[i]:
            b = 0
            for j in range(cols.size):
                if cols[j]:
                    R[a, b] = Q[i, j]
                    b += 1
            a += 1
    x, value, ok = _maxmin_kernel(R)
    full = np.zeros(rows.size)
    a = 0
    for i in range(rows.size):
        if rows[i]:
            full[i] = x[a]
            a += 1
    return full, value, ok


@dataclass(frozen=True)
class MaxminSolution:
    strategy: np.ndarray
    value: float


@dataclass(frozen=True)
class IDRResult:
    game: Game
    kept_rows: tuple[int, ...]
    kept_cols: tuple[int, ...]
    removed_rows: tuple[int, ...]
    removed_cols: tuple[int, ...]


def maxmin(U) -> MaxminSolution:
    """Maxmin strategy and value for the row player of payoff matrix ``U``."""
    U = np.ascontiguousarray(U, dtype=float)
    if U.ndim != 2 or 0 in U.shape:
        raise ValueError("maxmin needs a non-empty matrix")
    x, value, ok = _maxmin_kernel(U)
    if not ok:
        raise LPError("simplex iteration limit reached")
    return MaxminSolution(x, float(value))


def solve_maxmin(g: Game, player: int) -> MaxminSolution:
    own, _ = g.own_view(player)
    return maxmin(own)


def idr_maxmin(Q) -> MaxminSolution:
    """Maxmin of ``Q`` after removing dominated actions of the game (Q, -Q).

    Removed own actions get probability zero.
    """
    x, value, ok = _idr_maxmin_kernel(np.ascontiguousarray(Q, dtype=float))
    if not ok:
        raise LPError("simplex iteration limit reached")
    return MaxminSolution(x, float(value))


def dominance_masks(u1, u2) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = _idr_kernel(np.ascontiguousarray(u1, dtype=float), np.ascontiguousarray(u2, dtype=float))
    return rows, cols


def iterated_dominance_removal(g: Game) -> IDRResult:
    """Remove strictly dominated actions (mixed dominators allowed) to a fixed point.

    Each pass scans the row player's actions, then the column player's, lowest
    index first.
    """
    rows, cols = dominance_masks(g.u1, g.u2)
    kr = tuple(int(i) for i in np.flatnonzero(rows))
    kc = tuple(int(j) for j in np.flatnonzero(cols))
    reduced = Game(g.u1[np.ix_(kr, kc)], g.u2[np.ix_(kr, kc)], g.generator_id, g.instance_seed)
    return IDRResult(
        reduced,
        kr,
        kc,
        tuple(int(i) for i in np.flatnonzero(~rows)),
        tuple(int(j) for j in np.flatnonzero(~cols)),
    )
