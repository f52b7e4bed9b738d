"""Two-player normal-form games: representation, normalization, generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from rgtestbed import _rng

STRATEGY_TOL = 1e-9

GENERATORS = {
    "D1": "Normal Covariant Random Payoffs",
    "D2": "Bertrand Oligopoly",
    "D3": "Cournot Duopoly",
    "D4": "Dispersion Game",
    "D5": "Grab the Dollar",
    "D6": "Guess Two Thirds of the Average",
    "D7": "Majority Voting",
    "D8": "Minimum Effort Game",
    "D9": "Random Symmetric Game",
    "D10": "Travelers Dilemma",
    "D11": "Two Player Arms Race",
    "D12": "War of Attrition",
    "D13": "Two By Two Games",
}
STANDARD_SIZES = (2, 4, 6, 8, 10)


class InvalidGameError(ValueError):
    pass


class ActionProfile(NamedTuple):
    a1: int
    a2: int


@dataclass(frozen=True, eq=False)
class Game:
    """A bimatrix game with payoffs normalized to [0, 1].

    ``u1[i, j]`` and ``u2[i, j]`` are the row and column player's payoffs when
    the row player picks action ``i`` and the column player action ``j``.
    """

    u1: np.ndarray
    u2: np.ndarray
    generator_id: str = "custom"
    instance_seed: int = 0
    _own: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        u1 = np.array(self.u1, dtype=float)
        u2 = np.array(self.u2, dtype=float)
        if u1.ndim != 2 or u1.shape != u2.shape or 0 in u1.shape:
            raise InvalidGameError(f"payoff matrices must share a non-empty 2-D shape, got {u1.shape} and {u2.shape}")
        u1.setflags(write=False)
        u2.setflags(write=False)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)

    @property
    def rows(self) -> int:
        return self.u1.shape[0]

    @property
    def cols(self) -> int:
        return self.u1.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u1.shape

    def payoffs(self, player: int) -> np.ndarray:
        return self.u1 if _check_player(player) == 1 else self.u2

    def own_view(self, player: int) -> tuple[np.ndarray, np.ndarray]:
        """(own, opponent) payoff matrices with the player's actions as rows."""
        _check_player(player)
        if player not in self._own:
            if player == 1:
                self._own[1] = (self.u1, self.u2)
            else:
                own, opp = self.u2.T.copy(), self.u1.T.copy()
                own.setflags(write=False)
                opp.setflags(write=False)
                self._own[2] = (own, opp)
        return self._own[player]

    def n_actions(self, player: int) -> int:
        return self.rows if _check_player(player) == 1 else self.cols

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.generator_id == other.generator_id
            and self.instance_seed == other.instance_seed
            and np.array_equal(self.u1, other.u1)
            and np.array_equal(self.u2, other.u2)
        )

    __hash__ = None


def _check_player(player: int) -> int:
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player!r}")
    return player


def check_strategy(s, n: int | None = None) -> np.ndarray:
    """Validate a mixed strategy and return it as a float array."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("a mixed strategy is a non-empty vector")
    if n is not None and s.size != n:
        raise ValueError(f"strategy has {s.size} entries, expected {n}")
    if not np.all(np.isfinite(s)) or s.min() < 0 or abs(s.sum() - 1.0) > STRATEGY_TOL:
        raise ValueError(f"not a probability vector: {s}")
    return s


def pure(i: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _normalize_matrix(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.full_like(x, 0.5)
    out = (x - lo) / (hi - lo)
    # guard against rounding just outside the unit interval
    return np.clip(out, 0.0, 1.0)


def normalize_game(raw_u1, raw_u2, generator_id: str = "custom", instance_seed: int = 0) -> Game:
    """Map each player's payoffs affinely onto [0, 1].

    A player whose payoffs are all equal gets 0.5 everywhere.
    """
    u1 = np.asarray(raw_u1, dtype=float)
    u2 = np.asarray(raw_u2, dtype=float)
    if u1.shape != u2.shape or u1.ndim != 2:
        raise InvalidGameError(f"payoff matrices must share a 2-D shape, got {u1.shape} and {u2.shape}")
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
        raise InvalidGameError("payoffs must be finite")
    return Game(_normalize_matrix(u1), _normalize_matrix(u2), generator_id, int(instance_seed))


def expected_payoff(g: Game, player: int, s1, s2) -> float:
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s1.shape != (g.rows,) or s2.shape != (g.cols,):
        raise ValueError(f"strategy lengths {s1.shape}, {s2.shape} do not match a {g.rows}x{g.cols} game")
    return float(s1 @ g.payoffs(player) @ s2)


# ---------------------------------------------------------------------------
# Generators.  All produce raw payoffs that are then normalized.


def _d1_normal_covariant(m, n, rng):
    rho = rng.uniform(-0.9, 0.9)
    z1 = rng.standard_normal((m, n))
    z2 = rng.standard_normal((m, n))
    return z1, rho * z1 + math.sqrt(1.0 - rho * rho) * z2


def _d2_bertrand(m, n, rng):
    prices = np.arange(1, m + 1)
    profit = (prices - 1) * (m + 1 - prices)
    u1 = np.zeros((m, n))
    u2 = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            if i < j:
                u1[i, j] = profit[i]
            elif j < i:
                u2[i, j] = profit[j]
            else:
                u1[i, j] = u2[i, j] = profit[i] / 2.0
    return u1, u2


def _d3_cournot(m, n, rng):
    q1 = np.arange(1, m + 1)[:, None]
    q2 = np.arange(1, n + 1)[None, :]
    price = np.maximum(0, 2 * m - q1 - q2)
    return q1 * (price - 1.0), q2 * (price - 1.0)


def _d4_dispersion(m, n, rng):
    u = 1.0 - np.eye(m, n)
    return u, u.copy()


def _d5_grab_the_dollar(m, n, rng):
    t1 = np.arange(m)[:, None]
    t2 = np.arange(n)[None, :]
    u1 = np.where(t1 < t2, 1.0, np.where(t1 > t2, 0.5, 0.0))
    u2 = np.where(t2 < t1, 1.0, np.where(t2 > t1, 0.5, 0.0))
    return u1, u2


def _d6_guess_two_thirds(m, n, rng):
    u1 = np.zeros((m, n))
    u2 = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            x1, x2 = i + 1, j + 1
            target = (2.0 / 3.0) * (x1 + x2) / 2.0
            d1, d2 = abs(x1 - target), abs(x2 - target)
            if d1 < d2:
                u1[i, j] = 1.0
            elif d2 < d1:
                u2[i, j] = 1.0
            else:
                u1[i, j] = u2[i, j] = 0.5
    return u1, u2


def _d7_majority_voting(m, n, rng):
    if m != n:
        raise InvalidGameError("majority voting needs one candidate set shared by both voters")
    v1 = rng.uniform(0.0, 1.0, m)
    v2 = rng.uniform(0.0, 1.0, m)
    u1 = np.zeros((m, n))
    u2 = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            # one vote each unless they agree; ties go to the smallest index
            winner = i if i == j else min(i, j)
            u1[i, j] = v1[winner]
            u2[i, j] = v2[winner]
    return u1, u2


def _d8_minimum_effort(m, n, rng):
    e1 = np.arange(m)[:, None]
    e2 = np.arange(n)[None, :]
    low = np.minimum(e1, e2)
    return 0.2 + 0.2 * low - 0.1 * e1, 0.2 + 0.2 * low - 0.1 * e2


def _d9_random_symmetric(m, n, rng):
    if m != n:
        raise InvalidGameError("a symmetric game must be square")
    u = rng.uniform(0.0, 1.0, (m, n))
    return u, u.T.copy()


def _d10_travelers_dilemma(m, n, rng):
    c1 = np.arange(1, m + 1)[:, None].astype(float)
    c2 = np.arange(1, n + 1)[None, :].astype(float)
    base = np.minimum(c1, c2)
    transfer = 2.0 * np.sign(c2 - c1)
    return base + transfer, base - transfer


def _d11_arms_race(m, n, rng):
    a1 = np.arange(m)[:, None].astype(float)
    a2 = np.arange(n)[None, :].astype(float)
    return (a1 - a2) - 0.05 * a1**2, (a2 - a1) - 0.05 * a2**2


def _d12_war_of_attrition(m, n, rng):
    v1 = rng.uniform(m / 2.0, m)
    v2 = rng.uniform(m / 2.0, m)
    u1 = np.zeros((m, n))
    u2 = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            if i < j:
                u1[i, j], u2[i, j] = -i, v2 - i
            elif j < i:
                u1[i, j], u2[i, j] = v1 - j, -j
            else:
                u1[i, j], u2[i, j] = v1 / 2.0 - i, v2 / 2.0 - i
    return u1, u2


_RANK_PAYOFFS = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


def _d13_two_by_two(m, n, rng):
    u1 = _RANK_PAYOFFS[rng.permutation(4)].reshape(2, 2)
    u2 = _RANK_PAYOFFS[rng.permutation(4)].reshape(2, 2)
    return u1, u2


_BUILDERS = {
    "D1": _d1_normal_covariant,
    "D2": _d2_bertrand,
    "D3": _d3_cournot,
    "D4": _d4_dispersion,
    "D5": _d5_grab_the_dollar,
    "D6": _d6_guess_two_thirds,
    "D7": _d7_majority_voting,
    "D8": _d8_minimum_effort,
    "D9": _d9_random_symmetric,
    "D10": _d10_travelers_dilemma,
    "D11": _d11_arms_race,
    "D12": _d12_war_of_attrition,
    "D13": _d13_two_by_two,
}


def generate(generator_id: str, size, seed: int) -> Game:
    """Draw one instance from a generator; a pure function of its arguments."""
    if generator_id not in _BUILDERS:
        raise InvalidGameError(f"unknown generator {generator_id!r}")
    m, n = (size, size) if isinstance(size, int) else tuple(size)
    if generator_id == "D13":
        if (m, n) != (2, 2):
            raise InvalidGameError("D13 only produces 2x2 games")
    elif m != n or m < 1:
        raise InvalidGameError(f"generator {generator_id} needs a square size, got {m}x{n}")
    gen_num = int(generator_id[1:])
    rng = _rng.stream(seed, gen_num, m, n)
    raw1, raw2 = _BUILDERS[generator_id](m, n, rng)
    return normalize_game(raw1, raw2, generator_id, seed)


# ---------------------------------------------------------------------------
# Game files


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_game(g: Game) -> str:
    lines = [f"actions: {g.rows} {g.cols}", f"generator: {g.generator_id}", f"seed: {g.instance_seed}"]
    lines += [" ".join(_fmt(x) for x in row) for row in g.u1]
    lines.append("")
    lines += [" ".join(_fmt(x) for x in row) for row in g.u2]
    return "\n".join(lines) + "\n"


def parse_game(text: str) -> Game:
    lines = text.splitlines()
    try:
        if not lines[0].startswith("actions:"):
            raise InvalidGameError("first line must be 'actions: <m> <n>'")
        m, n = (int(x) for x in lines[0].split(":", 1)[1].split())
        generator = lines[1].split(":", 1)[1].strip()
        seed = int(lines[2].split(":", 1)[1])
        u1 = [[float(x) for x in line.split()] for line in lines[3 : 3 + m]]
        if lines[3 + m].strip():
            raise InvalidGameError("expected a blank line between the payoff matrices")
        u2 = [[float(x) for x in line.split()] for line in lines[4 + m : 4 + 2 * m]]
    except (IndexError, ValueError) as exc:
        raise InvalidGameError(f"malformed game file: {exc}") from exc
    g = Game(np.array(u1), np.array(u2), generator, seed)
    if g.shape != (m, n):
        raise InvalidGameError(f"declared {m}x{n} but payoffs are {g.shape}")
    if g.u1.min() < 0 or g.u1.max() > 1 or g.u2.min() < 0 or g.u2.max() > 1:
        raise InvalidGameError("payoffs must lie in [0, 1]")
    return g


def write_game(g: Game, path) -> None:
    Path(path).write_text(format_game(g), encoding="utf-8")


def read_game(path) -> Game:
    return parse_game(Path(path).read_text(encoding="utf-8"))
