"""Gradient-style learners: GIGA-WoLF, GSA and RVsigma."""

from __future__ import annotations

import math

import numpy as np

from rgtestbed._jit import njit
from rgtestbed.agents.base import Agent, InfoModel, OWN_REWARD_ONLY
from rgtestbed.solvers.equilibria import first_found
from rgtestbed.solvers.simplex import normalize_to_simplex, project_kernel


@njit(cache=True)
def giga_wolf_kernel(x, z, rhat, eta):
    xh = project_kernel(x + eta * rhat)
    zn = project_kernel(z + (eta / 3.0) * rhat)
    num = np.sqrt(np.sum((zn - z) ** 2))
    den = np.sqrt(np.sum((zn - xh) ** 2))
    delta = 1.0 if den == 0.0 else min(1.0, num / den)
    return xh + delta * (zn - xh), zn


def update_reward_estimate(rhat: np.ndarray, alpha: float, action: int, reward: float) -> None:
    """In place: r_a <- (1 - alpha) * r * [a played] + alpha * r_a, for every a."""
    rhat *= alpha
    rhat[action] += (1.0 - alpha) * reward


class _EstimatedGradient(Agent):
    info = OWN_REWARD_ONLY
    defaults = {"alpha_scale": 10.0, "alpha_offset": 100.0, "eta_slope": 1e4, "eta_offset": 1e8}

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.x = np.full(self.n, 1.0 / self.n)
        self.rhat = np.zeros(self.n)

    def alpha(self, t: int) -> float:
        p = self.params
        return 1.0 / math.sqrt(t / p["alpha_scale"] + p["alpha_offset"])

    def eta(self, t: int) -> float:
        p = self.params
        return 1.0 / math.sqrt(p["eta_slope"] * t + p["eta_offset"])

    def act(self, t):
        return self.x


class GigaWolf(_EstimatedGradient):
    algorithm = "giga_wolf"

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.z = self.x.copy()

    def observe(self, t, own_action, opp_action, reward):
        update_reward_estimate(self.rhat, self.alpha(t), own_action, reward)
        self.x, self.z = giga_wolf_kernel(self.x, self.z, self.rhat, self.eta(t))

    def beliefs(self):
        return {"v": 1, "x": self.x.tolist(), "z": self.z.tolist(), "rhat": self.rhat.tolist()}


class GSA(_EstimatedGradient):
    """Projected ascent on the reward estimate with decaying Gaussian noise."""

    algorithm = "gsa"
    defaults = dict(_EstimatedGradient.defaults, lambda_slope=1e5, lambda_offset=1e8)

    def noise_weight(self, t: int) -> float:
        p = self.params
        return 1.0 / math.sqrt(p["lambda_slope"] * t + p["lambda_offset"])

    def unprojected_step(self, t: int) -> np.ndarray:
        zeta = self.rng.standard_normal(self.n)
        return self.x + self.eta(t) * self.rhat + self.noise_weight(t) * zeta

    def observe(self, t, own_action, opp_action, reward):
        update_reward_estimate(self.rhat, self.alpha(t), own_action, reward)
        self.x = project_kernel(self.unprojected_step(t))

    def beliefs(self):
        return {"v": 1, "x": self.x.tolist(), "rhat": self.rhat.tolist()}


class RVSigma(Agent):
    """Exact-gradient ascent that slows down by sigma(t) while winning.

    "Winning" means the expected payoff of the current strategy against the
    opponent's empirical mix is at least the reference equilibrium payoff.
    """

    algorithm = "rvs"
    info = InfoModel(own_payoffs=True, opponent_payoffs=False, solutions=True, opponent_actions=True)
    defaults = {"sigma_scale": 25.0, "eta_slope": 1000.0, "eta_offset": 1e5}

    def __init__(self, view, rng, solutions=None, params=None):
        super().__init__(view, rng, solutions, params)
        self.U = view.own
        self.pi = np.full(self.n, 1.0 / self.n)
        self.opp_counts = np.zeros(view.n_opp)
        self.ne_payoff = first_found(self.solutions.equilibria).payoff(self.role)
        self.winning = False

    def sigma(self, t: int) -> float:
        return 1.0 / (1.0 + math.sqrt(t) / self.params["sigma_scale"])

    def eta(self, t: int) -> float:
        p = self.params
        return 1.0 / math.sqrt(p["eta_slope"] * t + p["eta_offset"])

    def act(self, t):
        return self.pi

    def observe(self, t, own_action, opp_action, reward):
        self.opp_counts[opp_action] += 1.0
        pi = self.pi
        r = self.U[:, opp_action]
        value = pi @ (self.U @ self.opp_counts) / self.opp_counts.sum()
        self.winning = bool(value >= self.ne_payoff)
        k = self.sigma(t) if self.winning else 1.0
        self.pi = normalize_to_simplex(pi + (self.eta(t) * k) * (r - pi @ r))

    def beliefs(self):
        return {"v": 1, "pi": self.pi.tolist(), "winning": self.winning}
