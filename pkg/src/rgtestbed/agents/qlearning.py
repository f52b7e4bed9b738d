"""Stateless Q-learning and minimax-Q (with and without dominance pruning)."""

from __future__ import annotations

import numpy as np

from rgtestbed.agents.base import Agent, InfoModel, OWN_REWARD_ONLY, frozen, pure_vectors
from rgtestbed.solvers.lp import idr_maxmin, maxmin

Q_DEFAULTS = {
    "alpha_decay": 1.0 / 2000.0,
    "epsilon0": 0.2,
    "epsilon_decay": 1.0 / 500.0,
    "gamma": 0.9,
}


def q_alpha(t: int, decay: float = Q_DEFAULTS["alpha_decay"]) -> float:
    return (1.0 - decay) ** t


def q_epsilon(t: int, eps0: float = Q_DEFAULTS["epsilon0"], decay: float = Q_DEFAULTS["epsilon_decay"]) -> float:
    return eps0 * (1.0 - decay) ** t


def q_update(q: float, alpha: float, reward: float, gamma: float, future: float) -> float:
    return (1.0 - alpha) * q + alpha * (reward + gamma * future)


class QLearner(Agent):
    algorithm = "q"
    info = OWN_REWARD_ONLY
    defaults = dict(Q_DEFAULTS)

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.Q = [0.0] * self.n
        self._pure = pure_vectors(self.n)
        self._uniform = frozen(np.full(self.n, 1.0 / self.n))
        p = self.params
        self._a_base = 1.0 - p["alpha_decay"]
        self._e_base = 1.0 - p["epsilon_decay"]
        self._eps0 = p["epsilon0"]
        self._gamma = p["gamma"]

    def act(self, t):
        if self.rng.random() < self._eps0 * self._e_base**t:
            return self._uniform
        Q = self.Q
        return self._pure[Q.index(max(Q))]

    def observe(self, t, own_action, opp_action, reward):
        Q = self.Q
        alpha = self._a_base**t
        Q[own_action] = (1.0 - alpha) * Q[own_action] + alpha * (reward + self._gamma * max(Q))

    def beliefs(self):
        return {"v": 1, "Q": list(self.Q)}


class MinimaxQ(Agent):
    """Q over joint actions; plays the maxmin strategy of Q with uniform exploration.

    The maxmin value of the current Q computed at act time is reused in the
    update, since Q does not change in between.
    """

    algorithm = "minimax_q"
    info = InfoModel(own_payoffs=False, opponent_payoffs=False, solutions=False, opponent_actions=True)
    defaults = dict(Q_DEFAULTS, cache_lp=0.0)
    prune = False

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.Q = np.zeros((self.n, view.n_opp))
        p = self.params
        self._a_base = 1.0 - p["alpha_decay"]
        self._e_base = 1.0 - p["epsilon_decay"]
        self._eps0 = p["epsilon0"]
        self._gamma = p["gamma"]
        self._cache = p["cache_lp"] != 0.0
        self._dirty = True
        self.sigma = np.full(self.n, 1.0 / self.n)
        self.value = 0.0

    def solve(self) -> None:
        if self.prune:
            sol = idr_maxmin(self.Q)
        else:
            sol = maxmin(self.Q)
        self.sigma = sol.strategy
        self.value = sol.value
        self._dirty = False

    def act(self, t):
        if self._dirty or not self._cache:
            self.solve()
        eps = self._eps0 * self._e_base**t
        s = (1.0 - eps) * self.sigma + eps / self.n
        s.setflags(write=False)
        return s

    def observe(self, t, own_action, opp_action, reward):
        alpha = self._a_base**t
        old = self.Q[own_action, opp_action]
        new = (1.0 - alpha) * old + alpha * (reward + self._gamma * self.value)
        if new != old:
            self.Q[own_action, opp_action] = new
            self._dirty = True

    def beliefs(self):
        return {"v": 1, "Q": self.Q.tolist(), "value": self.value}


class MinimaxQIDR(MinimaxQ):
    algorithm = "minimax_q_idr"
    prune = True
