"""Stationary baselines and fictitious play."""

from __future__ import annotations

import numpy as np

from rgtestbed.agents.base import Agent, InfoModel, OWN_REWARD_ONLY, frozen, pure_vectors
from rgtestbed.solvers.equilibria import select_determined_equilibrium


class RandomAgent(Agent):
    algorithm = "random"
    info = OWN_REWARD_ONLY

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self._uniform = frozen(np.full(self.n, 1.0 / self.n))

    def act(self, t):
        return self._uniform


class Determined(Agent):
    """Plays its part of the best-for-itself equilibrium, forever."""

    algorithm = "determined"
    info = InfoModel(own_payoffs=True, opponent_payoffs=True, solutions=True, opponent_actions=False)

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        eq = select_determined_equilibrium(self.solutions.equilibria, self.role)
        self.equilibrium = eq
        self._strategy = frozen(eq.strategy(self.role))

    def act(self, t):
        return self._strategy

    def beliefs(self):
        return {"v": 1, "eq_payoff": self.equilibrium.payoff(self.role)}


class FictitiousPlay(Agent):
    """Best response to the opponent's empirical action frequencies.

    Ties keep last round's action when it is still a best response and are
    otherwise broken uniformly at random.
    """

    algorithm = "fp"
    info = InfoModel(own_payoffs=True, opponent_payoffs=False, solutions=False, opponent_actions=True)
    defaults = {"prior_count": 1.0, "tie_tol": 1e-9}

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.U = view.own
        self.counts = np.full(view.n_opp, self.params["prior_count"])
        self.prev: int | None = None
        self._pure = pure_vectors(self.n)

    def expected_payoffs(self) -> np.ndarray:
        return self.U @ (self.counts / self.counts.sum())

    def act(self, t):
        ev = self.expected_payoffs()
        cutoff = ev.max() - self.params["tie_tol"]
        if self.prev is not None and ev[self.prev] >= cutoff:
            return self._pure[self.prev]
        br = np.flatnonzero(ev >= cutoff)
        a = int(br[0]) if br.size == 1 else int(br[self.rng.integers(br.size)])
        return self._pure[a]

    def observe(self, t, own_action, opp_action, reward):
        self.counts[opp_action] += 1.0
        self.prev = own_action

    def beliefs(self):
        return {"v": 1, "counts": self.counts.tolist()}
