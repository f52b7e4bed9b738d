"""Meta: a portfolio switching between best response, bullying and maxmin.

Phases
    initial         generous best response to the opponent's empirical mix
    best_response   a fixed pure best response, locked in at classification
    bully           the determined-style equilibrium component
    maxmin          the security strategy; absorbing

At ``tau1`` the opponent is classified by comparing its empirical
distributions over the last two disjoint windows of length ``H``.  A
stationary opponent gets a locked best response, any other gets bullied.  A
bully that has not paid within ``eps1`` of its equilibrium value after ``tau2``
iterations is replaced by a best response.  Every ``tau3`` iterations the
cumulative average reward is compared with the maxmin value.  Until ``tau0``
classification is re-run with probability ``p`` per iteration.
"""

from __future__ import annotations

import numpy as np

from rgtestbed.agents.base import TRACE_TAIL, Agent, InfoModel, frozen, pure_vectors
from rgtestbed.solvers.equilibria import select_determined_equilibrium


class Meta(Agent):
    algorithm = "meta"
    info = InfoModel(own_payoffs=True, opponent_payoffs=True, solutions=True, opponent_actions=True)
    defaults = {
        "eps0": 0.01,
        "eps1": 0.01,
        "eps2": 0.005,
        "eps3": 0.025,
        "tau0": 90000.0,
        "tau1": 10000.0,
        "tau2": 80000.0,
        "tau3": 1000.0,
        "p": 0.00005,
        "H": 1000.0,
    }

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        p = self.params
        self.U = view.own
        self.n_opp = view.n_opp
        self.tau0, self.tau1, self.tau2, self.tau3 = (int(p[k]) for k in ("tau0", "tau1", "tau2", "tau3"))
        self.H = int(p["H"])
        eq = select_determined_equilibrium(self.solutions.equilibria, self.role)
        self.bully_strategy = frozen(eq.strategy(self.role))
        self.bully_value = eq.payoff(self.role)
        mm = self.solutions.maxmin[self.role]
        self.maxmin_strategy = frozen(mm.strategy)
        self.maxmin_value = float(mm.value)
        self._pure = pure_vectors(self.n)

        self.opp_history: list[int] = []
        self.opp_counts = np.zeros(self.n_opp)
        self.total_reward = 0.0
        self.phase = "initial"
        self.current = None
        self.bully_start = 0
        self.bully_reward = 0.0
        self.bully_checked = False
        self.trace: list[tuple[int, str]] = [(0, "initial")]

    def _enter(self, t: int, phase: str, strategy) -> None:
        self.phase = phase
        self.current = strategy
        self.trace.append((t, phase))

    def generous_best_response(self) -> np.ndarray:
        total = self.opp_counts.sum()
        est = self.opp_counts / total if total > 0 else np.full(self.n_opp, 1.0 / self.n_opp)
        ev = self.U @ est
        mask = ev >= ev.max() - self.params["eps2"]
        s = mask / mask.sum()
        s.setflags(write=False)
        return s

    def locked_best_response(self) -> np.ndarray:
        total = self.opp_counts.sum()
        est = self.opp_counts / total if total > 0 else np.full(self.n_opp, 1.0 / self.n_opp)
        return self._pure[int(np.argmax(self.U @ est))]

    def opponent_stationary(self) -> bool:
        hist = self.opp_history
        h = min(self.H, len(hist) // 2)
        if h == 0:
            return True
        recent = np.bincount(hist[-h:], minlength=self.n_opp) / h
        older = np.bincount(hist[-2 * h : -h], minlength=self.n_opp) / h
        return bool(np.linalg.norm(recent - older) <= self.params["eps3"])

    def classify(self, t: int) -> None:
        if self.opponent_stationary():
            self._enter(t, "best_response", self.locked_best_response())
        elif self.phase != "bully":
            self.bully_start = t
            self.bully_reward = 0.0
            self.bully_checked = False
            self._enter(t, "bully", self.bully_strategy)

    def act(self, t):
        phase = self.phase
        if phase != "maxmin":
            if phase == "initial":
                if t >= self.tau1:
                    self.classify(t)
            elif self.tau1 < t < self.tau0 and self.rng.random() < self.params["p"]:
                self.classify(t)
            if self.phase == "bully" and not self.bully_checked and t - self.bully_start >= self.tau2:
                self.bully_checked = True
                avg = self.bully_reward / (t - self.bully_start)
                if avg < self.bully_value - self.params["eps1"]:
                    self._enter(t, "best_response", self.locked_best_response())
            if t > 0 and t % self.tau3 == 0 and self.total_reward / t < self.maxmin_value - self.params["eps0"]:
                self._enter(t, "maxmin", self.maxmin_strategy)
        if self.phase == "initial":
            return self.generous_best_response()
        return self.current

    def observe(self, t, own_action, opp_action, reward):
        self.opp_history.append(opp_action)
        self.opp_counts[opp_action] += 1.0
        self.total_reward += reward
        if self.phase == "bully":
            self.bully_reward += reward

    def beliefs(self):
        return {"v": 1, "phase": self.phase, "trace_tail": [list(x) for x in self.trace[-TRACE_TAIL:]]}

    def final_report(self):
        return dict(self.beliefs(), trace=[list(x) for x in self.trace])
