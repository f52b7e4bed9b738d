"""Common agent interface.

An agent is built once per match from a :class:`GameView` (what it is allowed
to know about the game), a private random stream, the precomputed solutions
(if its information model allows them) and a parameter map.  Each iteration
the engine calls ``act(t)`` and then ``observe(t, own, opp, reward)``.

Strategies returned by ``act`` are never mutated afterwards; the engine keeps
references to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, NamedTuple

import numpy as np

from rgtestbed.solvers.solutions import Solutions

BELIEF_VERSION = 1
# transitions kept in per-iteration belief records; the full trace goes in the final report
TRACE_TAIL = 5


class AgentError(ValueError):
    pass


@dataclass(frozen=True)
class InfoModel:
    own_payoffs: bool
    opponent_payoffs: bool
    solutions: bool
    opponent_actions: bool


OWN_REWARD_ONLY = InfoModel(own_payoffs=False, opponent_payoffs=False, solutions=False, opponent_actions=False)


@dataclass(frozen=True)
class GameView:
    """The part of a game an agent may see, oriented with its own actions as rows."""

    role: int
    n_own: int
    n_opp: int
    own: np.ndarray | None = None
    opp: np.ndarray | None = None


class AgentObservation(NamedTuple):
    t: int
    own_action: int
    opp_action: int | None
    reward: float


def frozen(v) -> np.ndarray:
    a = np.array(v, dtype=float)
    a.setflags(write=False)
    return a


def pure_vectors(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        e.setflags(write=False)
        out.append(e)
    return out


class Agent:
    algorithm: ClassVar[str] = ""
    info: ClassVar[InfoModel] = OWN_REWARD_ONLY
    defaults: ClassVar[dict[str, float]] = {}

    def __init__(self, view: GameView, rng: np.random.Generator, solutions: Solutions | None = None, params=None):
        self.view = view
        self.role = view.role
        self.n = view.n_own
        self.rng = rng
        self.params = self.resolve_params(params)
        if self.info.own_payoffs and view.own is None:
            raise AgentError(f"{self.algorithm} needs its payoff matrix")
        if self.info.solutions and solutions is None:
            raise AgentError(f"{self.algorithm} needs a solution file")
        self.solutions = solutions if self.info.solutions else None

    @classmethod
    def resolve_params(cls, params) -> dict[str, float]:
        out = dict(cls.defaults)
        for name, value in (params or {}).items():
            if name not in cls.defaults:
                raise AgentError(f"unknown parameter {name!r} for {cls.algorithm}")
            value = float(value)
            if not math.isfinite(value):
                raise AgentError(f"parameter {name!r} must be finite")
            out[name] = value
        return out

    def act(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def observe(self, t: int, own_action: int, opp_action: int | None, reward: float) -> None:
        pass

    def feed(self, obs: AgentObservation) -> None:
        self.observe(*obs)

    def beliefs(self) -> dict:
        return {"v": BELIEF_VERSION}

    def final_report(self) -> dict:
        return self.beliefs()
