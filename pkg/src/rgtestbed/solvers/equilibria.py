"""Nash equilibrium sets for bimatrix games."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from rgtestbed.games import Game
from rgtestbed.solvers.lemke_howson import DegenerateGameError, lemke_howson

EPS_NE = 1e-9
DEDUP_TOL = 1e-7
PARETO_TOL = 1e-12
# support enumeration runs (and completeness is claimed) up to this size
SUPPORT_ENUM_MAX = 6


@dataclass
class EquilibriumProfile:
    s1: np.ndarray
    s2: np.ndarray
    payoff1: float
    payoff2: float
    pareto_optimal: bool = True

    def payoff(self, player: int) -> float:
        return self.payoff1 if player == 1 else self.payoff2

    def strategy(self, player: int) -> np.ndarray:
        return self.s1 if player == 1 else self.s2


@dataclass
class EquilibriumSet:
    """Equilibria in enumeration order; the first entry is the label-0 path's."""

    profiles: list[EquilibriumProfile] = field(default_factory=list)
    possibly_incomplete: bool = False

    def __iter__(self):
        return iter(self.profiles)

    def __len__(self):
        return len(self.profiles)

    def __getitem__(self, i):
        return self.profiles[i]


def nash_gap(g: Game, s1, s2) -> float:
    """Largest gain either player could get from a pure deviation."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    r = g.u1 @ s2
    c = s1 @ g.u2
    return float(max(r.max() - s1 @ r, c.max() - c @ s2))


def is_nash(g: Game, s1, s2, eps: float = EPS_NE) -> bool:
    return nash_gap(g, s1, s2) <= eps


def make_profile(g: Game, s1, s2) -> EquilibriumProfile:
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    return EquilibriumProfile(s1, s2, float(s1 @ g.u1 @ s2), float(s1 @ g.u2 @ s2))


def _same(p: EquilibriumProfile, q: EquilibriumProfile, tol: float = DEDUP_TOL) -> bool:
    return bool(np.max(np.abs(p.s1 - q.s1)) <= tol and np.max(np.abs(p.s2 - q.s2)) <= tol)


def _add_unique(found: list[EquilibriumProfile], p: EquilibriumProfile) -> bool:
    if any(_same(p, q) for q in found):
        return False
    found.append(p)
    return True


def _indifference(M: np.ndarray, support_own, support_opp):
    """Opponent mix on ``support_opp`` making every action in ``support_own``
    equally good under payoff matrix ``M`` (own actions x opponent actions).

    Returns the full-length mix and the common payoff, or None when the
    system is singular or the mix is not a probability vector.
    """
    k = len(support_own)
    S = np.zeros((k + 1, k + 1))
    S[:k, :k] = M[np.ix_(support_own, support_opp)]
    S[:k, k] = -1.0
    S[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    mix = sol[:k]
    if mix.min() < -1e-12:
        return None
    full = np.zeros(M.shape[1])
    full[list(support_opp)] = np.maximum(mix, 0.0)
    full /= full.sum()
    return full


def support_enumeration(g: Game) -> list[EquilibriumProfile]:
    """All equilibria found by equal-size support enumeration.

    Complete for nondegenerate games.  Candidates are kept only if they pass
    the ``EPS_NE`` best-response check.
    """
    m, n = g.shape
    found: list[EquilibriumProfile] = []
    for k in range(1, min(m, n) + 1):
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                y = _indifference(g.u1, I, J)
                if y is None:
                    continue
                x = _indifference(g.u2.T, J, I)
                if x is None:
                    continue
                if is_nash(g, x, y):
                    _add_unique(found, make_profile(g, x, y))
    return found


def mark_pareto(profiles: list[EquilibriumProfile]) -> None:
    for p in profiles:
        p.pareto_optimal = not any(
            q.payoff1 >= p.payoff1 - PARETO_TOL
            and q.payoff2 >= p.payoff2 - PARETO_TOL
            and (q.payoff1 > p.payoff1 + PARETO_TOL or q.payoff2 > p.payoff2 + PARETO_TOL)
            for q in profiles
        )


def enumerate_equilibria(g: Game) -> EquilibriumSet:
    """Lemke-Howson from every label, plus support enumeration on small games."""
    m, n = g.shape
    small = m <= SUPPORT_ENUM_MAX and n <= SUPPORT_ENUM_MAX
    found: list[EquilibriumProfile] = []
    degenerate = False
    for label in range(m + n):
        try:
            s1, s2 = lemke_howson(g, label)
        except DegenerateGameError:
            degenerate = True
            break
        p = make_profile(g, s1, s2)
        if not is_nash(g, s1, s2):
            degenerate = True
            break
        _add_unique(found, p)

    if small:
        if degenerate:
            found = []
        for p in support_enumeration(g):
            _add_unique(found, p)
    result = EquilibriumSet(found, possibly_incomplete=not small)
    mark_pareto(result.profiles)
    return result


def select_determined_equilibrium(eqs, player: int) -> EquilibriumProfile:
    """Highest own payoff, then highest opponent payoff, then enumeration order."""
    profiles = list(eqs)
    if not profiles:
        raise ValueError("no equilibria to select from")
    other = 2 if player == 1 else 1
    best = profiles[0]
    for p in profiles[1:]:
        gain = p.payoff(player) - best.payoff(player)
        if gain > PARETO_TOL or (abs(gain) <= PARETO_TOL and p.payoff(other) > best.payoff(other) + PARETO_TOL):
            best = p
    return best


def first_found(eqs) -> EquilibriumProfile:
    profiles = list(eqs)
    if not profiles:
        raise ValueError("no equilibria")
    return profiles[0]
