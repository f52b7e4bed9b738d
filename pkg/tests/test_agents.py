from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DISPERSION, MATCHING_PENNIES, PD, random_game
from rgtestbed.agents import (
    ALGORITHMS,
    AgentConfig,
    AgentConfigError,
    format_agent_config,
    parse_agent_config,
    read_agent_config,
    write_agent_config,
)
from rgtestbed.agents.awesome import epoch_length, equilibrium_threshold, stationarity_threshold
from rgtestbed.agents.base import AgentError, GameView, AgentObservation
from rgtestbed.agents.gradient import giga_wolf_kernel, update_reward_estimate
from rgtestbed.agents.qlearning import q_alpha, q_epsilon, q_update
from rgtestbed.engine import make_view, simulate
from rgtestbed.games import Game, generate
from rgtestbed.solvers.equilibria import EquilibriumProfile, EquilibriumSet
from rgtestbed.solvers.lp import maxmin
from rgtestbed.solvers.simplex import project_to_simplex
from rgtestbed.solvers.solutions import Solutions, compute_solutions

FAST_META = {"tau0": 900, "tau1": 200, "tau2": 400, "tau3": 100, "H": 50, "p": 0.005}


def build(alg, game, role=1, seed=0, params=None, solutions=None):
    cfg = AgentConfig(alg, params or {})
    sol = solutions or compute_solutions(game)
    return cfg.build(make_view(game, role, cfg.info), np.random.default_rng(seed), sol)


def drive(agent, game, opp_actions, role=1):
    """Feed a fixed opponent action sequence; return the submitted strategies."""
    own, _ = game.own_view(role)
    rng = np.random.default_rng(99)
    out = []
    for t, j in enumerate(opp_actions):
        s = agent.act(t)
        out.append(np.array(s))
        i = int(rng.choice(len(s), p=s))
        agent.observe(t, i, j if agent.info.opponent_actions else None, float(own[i, j]))
    return np.array(out)


def on_simplex(S, tol=1e-9):
    return bool(np.all(S >= -tol) and np.all(np.abs(S.sum(axis=-1) - 1) <= tol))


# ---------------------------------------------------------------------------
# cross-cutting properties


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_strategies_stay_on_simplex(alg):
    g = generate("D1", 3, 8)
    params = FAST_META if alg == "meta" else None
    for role in (1, 2):
        run = simulate(g, AgentConfig(alg, params or {}), AgentConfig("random"), seed=role, total_iterations=1000, recorded_iterations=1000)
        S = run.strategies(1)
        assert S.shape == (1000, 3) and on_simplex(S)


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_withheld_matrices_are_never_read(alg):
    g = Game(np.random.default_rng(4).uniform(0, 1, (3, 2)), np.random.default_rng(5).uniform(0, 1, (3, 2)))
    params = FAST_META if alg == "meta" else {}
    a = simulate(g, AgentConfig(alg, params), AgentConfig("q"), seed=3, total_iterations=600, recorded_iterations=600)
    b = simulate(g, AgentConfig(alg, params), AgentConfig("q"), seed=3, total_iterations=600, recorded_iterations=600, poison=True)
    assert a.same_as(b)


@pytest.mark.parametrize("alg", ["q", "giga_wolf", "gsa", "random"])
def test_own_reward_only_agents_see_nothing_else(alg):
    view = make_view(MATCHING_PENNIES, 1, AgentConfig(alg).info)
    assert view.own is None and view.opp is None
    agent = AgentConfig(alg).build(view, np.random.default_rng(0))
    agent.act(0)
    agent.observe(0, 0, None, 1.0)


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_same_seed_same_trajectory(alg):
    g = generate("D9", 4, 2)
    params = FAST_META if alg == "meta" else {}
    opp = np.random.default_rng(7).integers(0, 4, 800)
    a = drive(build(alg, g, seed=11, params=params), g, opp)
    b = drive(build(alg, g, seed=11, params=params), g, opp)
    np.testing.assert_array_equal(a, b)


def test_missing_information_is_an_error():
    view = GameView(role=1, n_own=2, n_opp=2)
    with pytest.raises(AgentError):
        AgentConfig("fp").build(view, np.random.default_rng(0))
    full = make_view(MATCHING_PENNIES, 1, AgentConfig("determined").info)
    with pytest.raises(AgentError):
        AgentConfig("determined").build(full, np.random.default_rng(0), None)


# ---------------------------------------------------------------------------
# configuration files


def test_agent_config_round_trip(tmp_path):
    cfg = AgentConfig("q", {"gamma": 0.5})
    assert cfg.params["epsilon0"] == 0.2 and cfg.params["gamma"] == 0.5
    write_agent_config(cfg, tmp_path / "q.agent")
    assert read_agent_config(tmp_path / "q.agent") == cfg
    assert parse_agent_config(format_agent_config(cfg)) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "algorithm: q\nparam nonsense = 1\n",
        "algorithm: nope\n",
        "param gamma = 0.5\n",
        "algorithm: q\nparam gamma = inf\n",
        "algorithm: q\nparam gamma 0.5\n",
        "algorithm: q\nwhat\n",
    ],
)
def test_agent_config_rejects_bad_files(text):
    with pytest.raises(AgentConfigError):
        parse_agent_config(text)


# ---------------------------------------------------------------------------
# random and determined


def test_random_is_uniform_and_ignores_feedback():
    for n in (2, 10):
        g = Game(np.zeros((n, 2)), np.zeros((n, 2)))
        a = build("random", g)
        np.testing.assert_array_equal(a.act(0), np.full(n, 1 / n))
        a.observe(0, 0, None, 1.0)
        np.testing.assert_array_equal(a.act(1), np.full(n, 1 / n))


def test_determined_plays_unique_equilibrium():
    a = build("determined", PD, role=2)
    assert a.act(0).tolist() == [0.0, 1.0]
    first = drive(a, PD, [0, 1, 0, 1])
    assert np.all(first == [0.0, 1.0])


def test_determined_tie_break_on_opponent_payoff():
    p = EquilibriumProfile(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 0.9, 0.1)
    q = EquilibriumProfile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.9, 0.7)
    sol = Solutions(EquilibriumSet([p, q]), {1: maxmin([[0.9, 0], [0, 0.9]]), 2: maxmin([[0.1, 0], [0, 0.7]])})
    g = Game([[0.9, 0], [0, 0.9]], [[0.1, 0], [0, 0.7]])
    assert build("determined", g, solutions=sol).act(0).tolist() == [0.0, 1.0]


# ---------------------------------------------------------------------------
# fictitious play


def test_fp_locks_onto_best_response_to_point_mass():
    g = Game([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]])
    S = drive(build("fp", g, seed=3), g, [0] * 30)
    assert np.all(S[1:] == [1.0, 0.0])


def test_fp_replays_previous_action_on_exact_tie():
    g = Game([[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]])
    a = build("fp", g, seed=0)
    first = int(np.argmax(a.act(0)))
    for t in range(1, 50):
        a.observe(t - 1, first, t % 2, 0.5)
        assert int(np.argmax(a.act(t))) == first


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 4), st.integers(2, 4))
def test_fp_tie_persistence_property(seed, m, n):
    rng = np.random.default_rng(seed)
    # coarse payoffs make ties common
    g = Game(rng.integers(0, 3, (m, n)) / 2, rng.integers(0, 3, (m, n)) / 2)
    a = build("fp", g, seed=seed)
    prev = None
    for t in range(60):
        ev = a.expected_payoffs()
        s = a.act(t)
        act = int(np.argmax(s))
        if prev is not None and ev[prev] >= ev.max() - 1e-9:
            assert act == prev
        j = int(rng.integers(n))
        a.observe(t, act, j, float(g.u1[act, j]))
        prev = act


def test_fp_symmetric_dispersion_self_play_never_coordinates():
    a = build("fp", DISPERSION, role=1, seed=5)
    b = build("fp", DISPERSION, role=2, seed=5)
    for t in range(20):
        i = int(np.argmax(a.act(t)))
        j = int(np.argmax(b.act(t)))
        assert i == j and DISPERSION.u1[i, j] == 0.0
        a.observe(t, i, j, 0.0)
        b.observe(t, j, i, 0.0)


# ---------------------------------------------------------------------------
# Q-learning and minimax-Q


def test_q_formulas():
    assert q_update(0.5, 0.1, 1.0, 0.9, 0.5) == pytest.approx(0.595, abs=1e-15)
    assert q_update(0.3, 0.25, 1.0, 0.0, 123.0) == pytest.approx(0.75 * 0.3 + 0.25, abs=1e-15)
    assert q_epsilon(0) == 0.2 and q_alpha(0) == 1.0
    eps = [q_epsilon(t) for t in range(0, 100_000, 97)]
    assert all(x >= y for x, y in zip(eps, eps[1:]))
    assert q_epsilon(1000) == pytest.approx(0.2 * (1 - 1 / 500) ** 1000, rel=1e-15)


def test_q_greedy_converges_to_dominant_action():
    g = Game([[0.2, 0.1], [0.9, 0.8]], [[0.5, 0.5], [0.5, 0.5]])
    # exploration dies out within a few hundred steps, then play is greedy
    a = build("q", g, seed=1, params={"epsilon0": 1.0, "epsilon_decay": 0.01})
    S = drive(a, g, [1] * 10_000)
    assert q_epsilon(2000, 1.0, 0.01) < 1e-8
    assert np.all(S[2000:] == [0.0, 1.0])


def test_q_without_exploration_keeps_first_greedy_action():
    g = Game([[0.2, 0.1], [0.9, 0.8]], [[0.5, 0.5], [0.5, 0.5]])
    a = build("q", g, params={"epsilon0": 0.0})
    assert a.act(0).tolist() == [1.0, 0.0]  # lowest index among tied zeros
    S = drive(a, g, [1] * 1000)
    assert np.all(S == [1.0, 0.0])


def test_q_explores_with_uniform_vector():
    a = build("q", MATCHING_PENNIES, params={"epsilon0": 1.0, "epsilon_decay": 0.0})
    np.testing.assert_array_equal(a.act(0), [0.5, 0.5])


def test_minimax_q_single_row_is_exponential_averaging():
    g = Game([[0.2, 0.7, 0.4]], [[0.0, 0.0, 0.0]])
    a = build("minimax_q", g, params={"gamma": 0.0})
    expect = np.zeros(3)
    for t, j in enumerate([0, 1, 2, 1, 1, 0, 2]):
        a.act(t)
        a.observe(t, 0, j, float(g.u1[0, j]))
        alpha = q_alpha(t)
        expect[j] = (1 - alpha) * expect[j] + alpha * g.u1[0, j]
    np.testing.assert_allclose(a.Q[0], expect, rtol=0, atol=1e-15)


def test_minimax_q_learns_zero_sum_security_strategy():
    g = Game([[0.8, 0.3], [0.1, 0.6]], [[0.2, 0.7], [0.9, 0.4]])
    a = build("minimax_q", g, seed=1)
    drive(a, g, np.random.default_rng(2).integers(0, 2, 30_000))
    true = maxmin(g.u1).value
    assert (a.sigma @ g.u1).min() >= true - 0.05


@pytest.mark.parametrize("alg", ["minimax_q", "minimax_q_idr"])
def test_minimax_q_cache_flag_does_not_change_results(alg):
    g = generate("D1", 3, 4)
    a = simulate(g, AgentConfig(alg), AgentConfig("fp"), seed=6, total_iterations=2000, recorded_iterations=2000)
    b = simulate(g, AgentConfig(alg, {"cache_lp": 1}), AgentConfig("fp"), seed=6, total_iterations=2000, recorded_iterations=2000)
    assert a.same_as(b)


def test_minimax_q_idr_pruning():
    a = build("minimax_q_idr", random_game(np.random.default_rng(0), 3, 2))
    a.Q = np.array([[0.9, 0.8], [0.1, 0.2], [0.2, 0.9]])
    a.solve()
    assert a.sigma[1] == 0.0
    plain = build("minimax_q", MATCHING_PENNIES)
    pruned = build("minimax_q_idr", MATCHING_PENNIES)
    plain.Q = pruned.Q = np.array([[1.0, 0.0], [0.0, 1.0]])
    plain.solve()
    pruned.solve()
    np.testing.assert_array_equal(plain.sigma, pruned.sigma)


# ---------------------------------------------------------------------------
# gradient learners


def test_reward_estimate_update_as_printed():
    rhat = np.array([0.4, 0.4])
    update_reward_estimate(rhat, 0.5, 0, 1.0)
    np.testing.assert_allclose(rhat, [0.7, 0.2], rtol=0, atol=1e-15)


def test_giga_wolf_zero_gradient_fixed_point():
    x = np.array([0.2, 0.5, 0.3])
    xn, zn = giga_wolf_kernel(x, x.copy(), np.zeros(3), 0.01)
    np.testing.assert_allclose(xn, x, atol=1e-15)
    np.testing.assert_allclose(zn, x, atol=1e-15)


def test_giga_wolf_single_action():
    g = Game([[0.3, 0.9]], [[0.1, 0.2]])
    for alg in ("giga_wolf", "gsa"):
        S = drive(build(alg, g), g, [0, 1] * 50)
        assert np.all(S == 1.0)


def test_giga_wolf_recurrence_by_hand():
    a = build("giga_wolf", MATCHING_PENNIES)
    a.rhat = np.array([0.3, 0.1])
    x0, z0 = a.x.copy(), a.z.copy()
    a.observe(5, 0, None, 1.0)
    rhat = np.array([0.3, 0.1]) * a.alpha(5)
    rhat[0] += 1 - a.alpha(5)
    eta = a.eta(5)
    xh = project_to_simplex(x0 + eta * rhat)
    zn = project_to_simplex(z0 + eta / 3 * rhat)
    d = min(1.0, np.linalg.norm(zn - z0) / np.linalg.norm(zn - xh))
    np.testing.assert_allclose(a.x, xh + d * (zn - xh), rtol=0, atol=1e-15)
    np.testing.assert_allclose(a.z, zn, rtol=0, atol=1e-15)


def test_gsa_without_noise_is_projected_ascent():
    g = generate("D1", 3, 1)
    opp = np.random.default_rng(0).integers(0, 3, 500)
    a = build("gsa", g, params={"lambda_offset": 1e300})
    S = drive(a, g, opp)
    x = np.full(3, 1 / 3)
    rhat = np.zeros(3)
    rng = np.random.default_rng(99)
    for t, j in enumerate(opp):
        np.testing.assert_array_equal(S[t], x)
        i = int(rng.choice(3, p=x))
        update_reward_estimate(rhat, a.alpha(t), i, float(g.u1[i, j]))
        x = project_to_simplex(x + a.eta(t) * rhat)


def test_gsa_noise_has_zero_mean():
    a = build("gsa", generate("D1", 4, 2), seed=8, params={"lambda_slope": 0.0, "lambda_offset": 1.0})
    a.x = np.array([0.1, 0.2, 0.3, 0.4])
    a.rhat = np.array([0.9, 0.1, 0.5, 0.3])
    t = 10
    steps = np.array([a.unprojected_step(t) - a.x for _ in range(10_000)])
    se = steps.std(axis=0, ddof=1) / math.sqrt(len(steps))
    assert np.all(np.abs(steps.mean(axis=0) - a.eta(t) * a.rhat) < 3 * se)


def test_rvs_sigma_schedule_and_support():
    a = build("rvs", MATCHING_PENNIES, seed=2)
    assert a.sigma(0) == 1.0
    S = drive(a, MATCHING_PENNIES, np.random.default_rng(3).integers(0, 2, 10_000))
    assert on_simplex(S) and S[-1].min() > 0


def test_rvs_best_response_moves_toward_played_action():
    g = Game([[1.0, 1.0], [0.0, 0.0]], [[0.5, 0.5], [0.5, 0.5]])
    a = build("rvs", g)
    before = a.pi.copy()
    a.observe(0, 0, 1, 1.0)
    assert a.pi[0] >= before[0] and on_simplex(a.pi)


# ---------------------------------------------------------------------------
# AWESOME


def test_awesome_schedules():
    assert equilibrium_threshold(0) == 0.5 and stationarity_threshold(0) == 1.0
    assert epoch_length(0, 4) == 16
    assert epoch_length(1, 4) == 72
    assert epoch_length(2, 4) == math.ceil(4 / ((1 - 2 ** (-1 / 4)) / 16))


def test_awesome_self_play_unique_pure_equilibrium():
    run = simulate(PD, AgentConfig("awesome"), AgentConfig("awesome"), seed=0, total_iterations=3000, recorded_iterations=3000)
    assert np.all(run.p1_action == 1) and np.all(run.p2_action == 1)
    for report in run.final_reports:
        assert [e for _, e in report["trace"]] == ["restart"]


def test_awesome_keeps_equilibrium_against_uniform_opponent():
    a = build("awesome", MATCHING_PENNIES, seed=1)
    drive(a, MATCHING_PENNIES, np.random.default_rng(4).integers(0, 2, 2000))
    assert a.playing_equilibrium and a.restarts == 0


def test_awesome_rejects_equilibrium_against_pure_opponent():
    a = build("awesome", MATCHING_PENNIES, seed=1)
    S = drive(a, MATCHING_PENNIES, [0] * 8000)
    events = dict((e, s) for s, e in a.trace)
    # epoch 0 deviation is exactly eps_e(0) = 1/2, not above it; epoch 1 rejects
    assert events["reject_equilibrium"] == epoch_length(0, 4) + epoch_length(1, 4)
    assert "reject_stationarity" not in events
    assert np.all(S[-1000:] == [1.0, 0.0])


def test_awesome_beliefs_carry_trace_tail():
    a = build("awesome", MATCHING_PENNIES)
    assert a.beliefs()["trace_tail"] == [[0, "restart"]]
    assert a.final_report()["trace"] == [[0, "restart"]]


# ---------------------------------------------------------------------------
# Meta


def test_meta_locks_best_response_against_stationary_opponent():
    g = Game([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]])
    a = build("meta", g, params=FAST_META)
    S = drive(a, g, [1] * 1000)
    assert a.phase == "best_response"
    assert np.all(S[FAST_META["tau1"] :] == [0.0, 1.0])


def test_meta_security_trigger():
    a = build("meta", MATCHING_PENNIES, params=FAST_META)
    for t in range(FAST_META["tau3"]):
        a.act(t)
        a.observe(t, 0, 1, 0.0)
    s = a.act(FAST_META["tau3"])
    assert a.phase == "maxmin"
    np.testing.assert_allclose(s, [0.5, 0.5], atol=1e-15)


def test_meta_bullies_non_stationary_opponent():
    a = build("meta", MATCHING_PENNIES, params=dict(FAST_META, p=0.0))
    # opponent switches from column 0 to column 1 halfway through the window pair
    drive(a, MATCHING_PENNIES, [0] * 150 + [1] * 100)
    assert a.phase in ("bully", "maxmin")
    assert (FAST_META["tau1"], "bully") in a.trace


def test_meta_common_payoff_self_play_is_secure():
    u = np.array([[1.0, 0.2], [0.3, 0.1]])
    g = Game(u, u.T.copy())
    run = simulate(g, AgentConfig("meta", FAST_META), AgentConfig("meta", FAST_META), seed=2, total_iterations=1500, recorded_iterations=1500)
    sol = compute_solutions(g)
    for p in (1, 2):
        assert run.rewards(p).mean() >= sol.maxmin[p].value - FAST_META.get("eps0", 0.01)
    assert np.all(run.p1_action == 0) and np.all(run.p2_action == 0)


def test_observation_tuple_feeds_observe():
    a = build("fp", MATCHING_PENNIES)
    a.feed(AgentObservation(0, 0, 1, 0.0))
    assert a.counts.tolist() == [1.0, 2.0]
