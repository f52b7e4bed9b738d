"""AWESOME: adapt when everybody is stationary, otherwise move to equilibrium.

Epoch-based hypothesis testing.  Play proceeds in epochs of growing length
N(t).  At first the agent assumes everyone plays the special equilibrium (the
label-0 Lemke-Howson one) and plays its own component.  Once the opponent's
epoch distribution strays too far from its component, the agent starts
best-responding to the previous epoch while the opponent looks stationary; a
failed stationarity test restarts everything from epoch 0.
"""

from __future__ import annotations

import math

import numpy as np

from rgtestbed.agents.base import TRACE_TAIL, Agent, InfoModel, frozen, pure_vectors
from rgtestbed.solvers.equilibria import first_found


def equilibrium_threshold(t: int) -> float:
    return 1.0 / (t + 2)


def stationarity_threshold(t: int) -> float:
    return 1.0 / (t + 1)


def epoch_length(t: int, total_actions: int) -> int:
    """N(t) = ceil(|A| / ((1 - 2^(-1/t^2)) eps_e(t)^2)); the factor is 1 at t = 0."""
    factor = 1.0 if t == 0 else -math.expm1(-math.log(2.0) / (t * t))
    return math.ceil(total_actions / (factor * equilibrium_threshold(t) ** 2))


class Awesome(Agent):
    algorithm = "awesome"
    info = InfoModel(own_payoffs=True, opponent_payoffs=True, solutions=True, opponent_actions=True)

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.U = view.own
        self.n_opp = view.n_opp
        self.total_actions = self.n + self.n_opp
        eq = first_found(self.solutions.equilibria)
        self.own_eq = frozen(eq.strategy(self.role))
        self.opp_eq = np.asarray(eq.strategy(3 - self.role), dtype=float)
        self.mu = float(self.U.max() - self.U.min())
        self._pure = pure_vectors(self.n)
        self.restarts = -1
        self.trace: list[tuple[int, str]] = []
        self._steps = 0
        self._restart(0)

    def _restart(self, step: int) -> None:
        self.restarts += 1
        self.epoch = 0
        self.playing_equilibrium = True
        self.just_rejected = False
        self.phi = self.own_eq
        self.prev_dist: np.ndarray | None = None
        self._begin_epoch()
        self.trace.append((step, "restart"))

    def _begin_epoch(self) -> None:
        self.epoch_len = epoch_length(self.epoch, self.total_actions)
        self.counts = [0] * self.n_opp
        self.filled = 0

    def act(self, t):
        return self.phi

    def observe(self, t, own_action, opp_action, reward):
        self._steps += 1
        self.counts[opp_action] += 1
        self.filled += 1
        if self.filled == self.epoch_len:
            self._end_epoch()

    def _end_epoch(self) -> None:
        t = self.epoch
        dist = np.asarray(self.counts, dtype=float) / self.filled
        if self.playing_equilibrium:
            if np.max(np.abs(dist - self.opp_eq)) > equilibrium_threshold(t):
                self.playing_equilibrium = False
                self.just_rejected = True
                self.phi = self._pure[int(self.rng.integers(self.n))]
                self.trace.append((self._steps, "reject_equilibrium"))
        else:
            if not self.just_rejected and np.max(np.abs(dist - self.prev_dist)) > stationarity_threshold(t):
                self.trace.append((self._steps, "reject_stationarity"))
                self._restart(self._steps)
                return
            self.just_rejected = False
            ev = self.U @ dist
            b = int(np.argmax(ev))
            margin = 2 * self.n * stationarity_threshold(t + 1) * self.mu
            if ev[b] > self.phi @ ev + margin:
                self.phi = self._pure[b]
                self.trace.append((self._steps, f"switch_br_{b}"))
        self.prev_dist = dist
        self.epoch += 1
        self._begin_epoch()

    def beliefs(self):
        return {
            "v": 1,
            "epoch": self.epoch,
            "epoch_len": self.epoch_len,
            "playing_equilibrium": self.playing_equilibrium,
            "just_rejected": self.just_rejected,
            "restarts": self.restarts,
            "trace_tail": [list(x) for x in self.trace[-TRACE_TAIL:]],
        }

    def final_report(self):
        return dict(self.beliefs(), trace=[list(x) for x in self.trace])
