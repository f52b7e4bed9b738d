from __future__ import annotations

import itertools

import numpy as np
import pytest

from rgtestbed.analysis import (
    AnalysisError,
    best_algorithm_sets_per_generator,
    best_response_sets,
    build_algorithm_game,
    build_table,
    correlation_screens,
    domination_flags,
    dominated_algorithms,
    pure_equilibria,
    pure_equilibrium_mask,
    run_analysis,
    self_play_contrasts,
    similarity_matrix,
    subsampled_games,
    summary_rows,
)
from rgtestbed.metrics import MatchInfo, MetricResult

ALGS = ("a", "b", "c")
# protagonist x opponent mean reward; "c" is strictly dominated by "a",
# and (a, a) is the unique pure equilibrium of the symmetric game
MEANS = np.array([[0.8, 0.7, 0.9], [0.6, 0.75, 0.85], [0.5, 0.4, 0.6]])


def synthetic(n_games=30, noise=0.02, seed=0, means=MEANS, gens=("D1", "D2")):
    rng = np.random.default_rng(seed)
    results, index = [], []
    for g, (i, a), (j, b) in itertools.product(range(n_games), enumerate(ALGS), enumerate(ALGS)):
        mid = f"g{g:04d}_{a}_vs_{b}"
        gen = gens[g % len(gens)]
        size = 2 + 2 * (g % 3)
        index.append(MatchInfo(mid, a, b, gen, size, size))
        for p, (x, y) in ((1, (i, j)), (2, (j, i))):
            r = means[x, y] + noise * rng.standard_normal()
            results.append(MetricResult(mid, p, "average_reward", float(r)))
            results.append(MetricResult(mid, p, "mean_regret", float(1 - r)))
            results.append(MetricResult(mid, p, "maxmin_distance", float(r - 0.5)))
        results.append(MetricResult(mid, 0, "stationarity", 0.0, ("stable",)))
        results.append(MetricResult(mid, 0, "ne_convergence", 0.0, ("class=ne_pareto_optimal",)))
    return build_table(results, index)


def test_build_table_layout():
    t = synthetic(n_games=2)
    assert len(t) == 2 * 9 * 2
    assert t.algorithms == list(ALGS) and t.generators == ["D1", "D2"]
    row = t.where(protagonist="c", opponent="a")
    assert np.all(np.abs(row.metric("average_reward") - 0.5) < 0.1)
    assert np.all(t.metric("stable") == 1.0) and set(t.ne_class.tolist()) == {"ne_pareto_optimal"}
    with pytest.raises(AnalysisError):
        t.metric("speed")
    with pytest.raises(AnalysisError):
        build_table([MetricResult("zzz", 1, "average_reward", 0.0)], [])


def test_algorithm_game_means():
    ag = build_algorithm_game(synthetic(noise=0.0))
    np.testing.assert_allclose(ag.matrix, MEANS, atol=1e-15)
    assert np.all(ag.counts == 60)


def test_domination_flags_on_fixed_games():
    g = np.array([[[1.0, 1.0], [0.0, 0.0]], [[1.0, 1.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]])
    strict, weak = domination_flags(g)
    assert strict.tolist() == [[False, True], [False, False], [False, False]]
    # identical rows do not dominate each other
    assert weak.tolist() == [[False, True], [False, True], [False, False]]


def test_dominated_algorithm_detected():
    rates = {r.algorithm: r for r in dominated_algorithms(synthetic(), n_subsamples=2000, seed=1)}
    assert rates["c"].strictly_dominated and rates["c"].strict == 1.0
    assert not rates["a"].weakly_dominated and not rates["b"].weakly_dominated


def test_subsampling_is_seeded_and_centred():
    t = synthetic()
    algs, g1 = subsampled_games(t, 500, seed=3)
    _, g2 = subsampled_games(t, 500, seed=3)
    np.testing.assert_array_equal(g1, g2)
    np.testing.assert_allclose(g1.mean(axis=0), MEANS, atol=0.01)
    one = synthetic(n_games=1)
    with pytest.raises(AnalysisError):
        subsampled_games(one.select(one.role == 1), 10)


def test_pure_equilibria():
    eqs = pure_equilibria(synthetic(), n_subsamples=1000, seed=0)
    assert eqs[0].row == eqs[0].col == "a" and eqs[0].significant
    # brute force on a single matrix
    M = np.array([[3.0, 0.0], [5.0, 1.0]])
    mask = pure_equilibrium_mask(M[None])[0]
    brute = [[M[i, j] == M[:, j].max() and M[j, i] == M[:, i].max() for j in range(2)] for i in range(2)]
    assert mask.tolist() == brute == [[False, False], [False, True]]


def test_best_sets():
    t = synthetic()
    br = {s.key: s for s in best_response_sets(t, k=500)}
    assert br["a"].best == "a" and br["b"].best == "b" and br["c"].best == "a"
    assert "c" not in br["a"].members
    per_gen = best_algorithm_sets_per_generator(t, k=500)
    assert [s.key for s in per_gen] == ["D1", "D2"] and all(s.best == "a" for s in per_gen)
    # identical distributions overlap, so both algorithms are in the set
    tie = synthetic(means=np.full((3, 3), 0.5), noise=0.05)
    assert len(best_response_sets(tie, k=500)[0].members) >= 2


def test_similarity_counts_are_symmetric():
    sim = similarity_matrix(synthetic())
    assert np.array_equal(sim.counts, sim.counts.T) and np.all(np.diag(sim.counts) == 0)
    assert np.all(sim.counts <= sim.compared)
    a, c = sim.algorithms.index("a"), sim.algorithms.index("c")
    assert sim.counts[a, c] == 0


def test_correlation_screens():
    t = synthetic()
    cells = correlation_screens(t, "average_reward", "mean_regret")
    assert all(c.sign == "-" and c.rho == -1.0 for c in cells)
    t.values["flat"] = np.zeros(len(t))
    assert all(c.degenerate and c.sign == "x" for c in correlation_screens(t, "size", "flat"))


def test_self_play_and_summary():
    t = synthetic()
    by = {c.algorithm: c for c in self_play_contrasts(t, k=500)}
    assert by["b"].self_mean == pytest.approx(0.75, abs=0.01)
    rows = {(a, f, s): v for a, f, s, v in summary_rows(t)}
    assert rows[("a", "all", "runs")] == 180.0
    assert rows[("b", "all", "fraction_enforceable")] == 1.0
    assert rows[("a", "self_play", "fraction_ne_pareto_optimal")] == 1.0


def test_run_analysis_writes_all_tables(tmp_path):
    paths = run_analysis(synthetic(), tmp_path, seed=0, n_subsamples=500, bootstrap_k=200)
    expected = {"algorithm_game", "generator_reward", "dominance", "pure_equilibria", "best_sets", "similarity", "cdf", "self_play", "summary"}
    assert expected <= set(paths)
    for p in paths.values():
        lines = p.read_text().splitlines()
        assert lines[0].startswith("#schema=") and len(lines) >= 3
    dom = {line.split(",")[0]: line.split(",") for line in paths["dominance"].read_text().splitlines()[2:]}
    assert dom["c"][3] == "1" and dom["a"][3] == "0"
    again = run_analysis(synthetic(), tmp_path / "b", seed=0, n_subsamples=500, bootstrap_k=200)
    assert all(paths[k].read_bytes() == again[k].read_bytes() for k in paths)
