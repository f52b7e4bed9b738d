"""Per-run performance metrics.

Output rows are ``match_id,player,metric,value,flags``; player 0 marks a
joint (whole-match) metric.  ``flags`` is a ';'-separated subset of

    enforceable           maxmin distance >= 0
    stable                joint play stationary over the recorded window
    ne_pareto             converged to a Pareto-optimal equilibrium
    ne_dominated          converged to a Pareto-dominated equilibrium
    possibly_incomplete   the equilibrium set may be missing equilibria

plus ``class=<label>`` and ``eq=<index>`` on ``ne_convergence`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rgtestbed.engine import RunRecord
from rgtestbed.games import Game
from rgtestbed.solvers.equilibria import EquilibriumSet
from rgtestbed.solvers.solutions import Solutions

METRICS_SCHEMA = "metrics/1"
METRICS_HEADER = "match_id,player,metric,value,flags"
THETA = 0.02
METRICS = (
    "average_reward",
    "mean_regret",
    "maxmin_distance",
    "stationarity",
    "ne_convergence",
    "repeated_game_consistency",
)
NOT_STATIONARY = "not_stationary"
STATIONARY_NOT_NE = "stationary_not_ne"
NE_PARETO = "ne_pareto_optimal"
NE_DOMINATED = "ne_pareto_dominated"


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricResult:
    match_id: str
    player: int
    metric: str
    value: float
    flags: tuple[str, ...] = ()


def _check_nonempty(run: RunRecord) -> None:
    if run.recorded < 1:
        raise MetricError("run record has no recorded iterations")


def average_reward(run: RunRecord, player: int) -> float:
    _check_nonempty(run)
    return float(np.mean(run.rewards(player)))


def mean_regret(run: RunRecord, player: int, game: Game) -> float:
    """Best static pure action's total reward against the opponent's realized
    actions, minus the expected reward of the submitted strategies, over T."""
    _check_nonempty(run)
    own, _ = game.own_view(player)
    opp_actions = run.actions(3 - player)
    strategies = run.strategies(player)
    if strategies.shape != (run.recorded, own.shape[0]):
        raise MetricError("run record lacks submitted strategies for this player")
    cols = own[:, opp_actions]  # own actions x T
    best_static = cols.sum(axis=1).max()
    realized = np.einsum("ta,at->", strategies, cols)
    return float((best_static - realized) / run.recorded)


def maxmin_distance(run: RunRecord, player: int, maxmin_value: float) -> float:
    return average_reward(run, player) - maxmin_value


def joint_distribution(a1: np.ndarray, a2: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    m, n = shape
    return np.bincount(a1 * n + a2, minlength=m * n).reshape(m, n) / len(a1)


def stationarity(run: RunRecord, theta: float = THETA) -> tuple[bool, float]:
    """Compare the joint action distributions of the two halves (l-infinity)."""
    _check_nonempty(run)
    T = run.recorded
    if T % 2:
        raise MetricError("stationarity needs an even number of recorded iterations")
    h = T // 2
    first = joint_distribution(run.p1_action[:h], run.p2_action[:h], run.shape)
    second = joint_distribution(run.p1_action[h:], run.p2_action[h:], run.shape)
    d = float(np.max(np.abs(first - second)))
    return d <= theta, d


def empirical_marginals(run: RunRecord) -> tuple[np.ndarray, np.ndarray]:
    m, n = run.shape
    T = run.recorded
    return np.bincount(run.p1_action, minlength=m) / T, np.bincount(run.p2_action, minlength=n) / T


@dataclass(frozen=True)
class Convergence:
    distance: float
    label: str
    equilibrium: int
    stable: bool


def ne_convergence(run: RunRecord, eqs: EquilibriumSet, theta: float = THETA) -> Convergence:
    """Distance from the empirical marginals to the closest equilibrium."""
    if len(eqs) == 0:
        raise MetricError("empty equilibrium set")
    stable, _ = stationarity(run, theta)
    x, y = empirical_marginals(run)
    dists = [max(np.max(np.abs(x - e.s1)), np.max(np.abs(y - e.s2))) for e in eqs]
    k = int(np.argmin(dists))
    d = float(dists[k])
    if not stable:
        label = NOT_STATIONARY
    elif d > theta:
        label = STATIONARY_NOT_NE
    else:
        label = NE_PARETO if eqs[k].pareto_optimal else NE_DOMINATED
    return Convergence(d, label, k, stable)


def repeated_game_consistency(run: RunRecord, maxmin1: float, maxmin2: float) -> bool:
    return maxmin_distance(run, 1, maxmin1) >= 0 and maxmin_distance(run, 2, maxmin2) >= 0


def compute_metrics(run: RunRecord, game: Game, solutions: Solutions, metrics=METRICS) -> list[MetricResult]:
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise MetricError(f"unknown metrics: {', '.join(sorted(unknown))}")
    mid = run.match_id
    mm = {p: float(solutions.maxmin[p].value) for p in (1, 2)}
    out: list[MetricResult] = []
    for p in (1, 2):
        if "average_reward" in metrics:
            out.append(MetricResult(mid, p, "average_reward", average_reward(run, p)))
        if "mean_regret" in metrics:
            out.append(MetricResult(mid, p, "mean_regret", mean_regret(run, p, game)))
        if "maxmin_distance" in metrics:
            d = maxmin_distance(run, p, mm[p])
            out.append(MetricResult(mid, p, "maxmin_distance", d, ("enforceable",) if d >= 0 else ()))
    if "stationarity" in metrics:
        stable, d = stationarity(run)
        out.append(MetricResult(mid, 0, "stationarity", d, ("stable",) if stable else ()))
    if "ne_convergence" in metrics:
        c = ne_convergence(run, solutions.equilibria)
        flags = [f"class={c.label}", f"eq={c.equilibrium}"]
        if c.stable:
            flags.append("stable")
        if c.label == NE_PARETO:
            flags.append("ne_pareto")
        elif c.label == NE_DOMINATED:
            flags.append("ne_dominated")
        if solutions.equilibria.possibly_incomplete:
            flags.append("possibly_incomplete")
        out.append(MetricResult(mid, 0, "ne_convergence", c.distance, tuple(flags)))
    if "repeated_game_consistency" in metrics:
        ok = repeated_game_consistency(run, mm[1], mm[2])
        out.append(MetricResult(mid, 0, "repeated_game_consistency", 1.0 if ok else 0.0, ("enforceable",) if ok else ()))
    return out


# ---------------------------------------------------------------------------
# Files


def format_metrics(results: list[MetricResult]) -> str:
    lines = [f"#schema={METRICS_SCHEMA}", METRICS_HEADER]
    lines += [f"{r.match_id},{r.player},{r.metric},{r.value!r},{';'.join(r.flags)}" for r in results]
    return "\n".join(lines) + "\n"


def parse_metrics(text: str) -> list[MetricResult]:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0] != f"#schema={METRICS_SCHEMA}" or lines[1] != METRICS_HEADER:
        raise MetricError("not a metrics file")
    out = []
    for line in lines[2:]:
        if not line:
            continue
        mid, player, metric, value, flags = line.split(",")
        out.append(MetricResult(mid, int(player), metric, float(value), tuple(f for f in flags.split(";") if f)))
    return out


def write_metrics(results: list[MetricResult], path) -> None:
    Path(path).write_text(format_metrics(results), encoding="utf-8")


def read_metrics(path) -> list[MetricResult]:
    return parse_metrics(Path(path).read_text(encoding="utf-8"))


def read_metric_list(path) -> tuple[str, ...]:
    """A plain-text file naming one metric per line ('#' starts a comment)."""
    names = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        name = raw.split("#", 1)[0].strip()
        if name:
            names.append(name)
    unknown = set(names) - set(METRICS)
    if unknown:
        raise MetricError(f"unknown metrics: {', '.join(sorted(unknown))}")
    return tuple(names)


# ---------------------------------------------------------------------------
# Match index: who played which game in each run

INDEX_SCHEMA = "matchindex/1"
INDEX_HEADER = "match_id,row,col,generator,rows,cols"


@dataclass(frozen=True)
class MatchInfo:
    match_id: str
    row: str
    col: str
    generator: str
    rows: int
    cols: int

    @classmethod
    def of(cls, run: RunRecord) -> MatchInfo:
        return cls(run.match_id, run.row_algorithm, run.col_algorithm, run.generator, *run.shape)


def format_index(infos: list[MatchInfo]) -> str:
    lines = [f"#schema={INDEX_SCHEMA}", INDEX_HEADER]
    lines += [f"{i.match_id},{i.row},{i.col},{i.generator},{i.rows},{i.cols}" for i in infos]
    return "\n".join(lines) + "\n"


def parse_index(text: str) -> list[MatchInfo]:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0] != f"#schema={INDEX_SCHEMA}" or lines[1] != INDEX_HEADER:
        raise MetricError("not a match index file")
    out = []
    for line in lines[2:]:
        if line:
            mid, row, col, gen, m, n = line.split(",")
            out.append(MatchInfo(mid, row, col, gen, int(m), int(n)))
    return out


def write_index(infos: list[MatchInfo], path) -> None:
    Path(path).write_text(format_index(infos), encoding="utf-8")


def read_index(path) -> list[MatchInfo]:
    return parse_index(Path(path).read_text(encoding="utf-8"))
