"""Cross-run analyses over per-run metrics.

Every run contributes two observations, one per player: a protagonist, its
opponent, the game's generator and size, and that player's metric values.
Joint metrics (stationarity, equilibrium convergence, repeated-game
consistency) are shared by both observations of a run.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rgtestbed.metrics import MatchInfo, MetricResult
from rgtestbed.stats import (
    DegenerateInputError,
    bootstrap_ci,
    ks_two_sample,
    prob_dominance,
    spearman,
)

DOMINANCE_LEVEL = 0.95
SUBSAMPLES = 10_000
# replicates handled per vectorized block in the algorithm-game subsampling
_BLOCK = 500


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Results table


@dataclass
class ResultsTable:
    """Column store with one row per (run, player)."""

    match_id: np.ndarray
    protagonist: np.ndarray
    opponent: np.ndarray
    generator: np.ndarray
    size: np.ndarray
    role: np.ndarray
    values: dict[str, np.ndarray]
    ne_class: np.ndarray

    def __len__(self):
        return len(self.match_id)

    def select(self, mask) -> ResultsTable:
        mask = np.asarray(mask)
        return ResultsTable(
            self.match_id[mask],
            self.protagonist[mask],
            self.opponent[mask],
            self.generator[mask],
            self.size[mask],
            self.role[mask],
            {k: v[mask] for k, v in self.values.items()},
            self.ne_class[mask],
        )

    def where(self, protagonist=None, opponent=None, generator=None, size=None, self_play=None) -> ResultsTable:
        mask = np.ones(len(self), dtype=bool)
        if protagonist is not None:
            mask &= self.protagonist == protagonist
        if opponent is not None:
            mask &= self.opponent == opponent
        if generator is not None:
            mask &= self.generator == generator
        if size is not None:
            mask &= self.size == size
        if self_play is not None:
            mask &= (self.protagonist == self.opponent) == self_play
        return self.select(mask)

    def metric(self, name: str) -> np.ndarray:
        try:
            return self.values[name]
        except KeyError:
            raise AnalysisError(f"metric {name!r} not available") from None

    @property
    def algorithms(self) -> list[str]:
        return sorted(set(self.protagonist.tolist()) | set(self.opponent.tolist()))

    @property
    def generators(self) -> list[str]:
        return sorted(set(self.generator.tolist()), key=_generator_key)


def _generator_key(g: str):
    return (0, int(g[1:])) if g[:1] == "D" and g[1:].isdigit() else (1, g)


def build_table(results: list[MetricResult], index: list[MatchInfo]) -> ResultsTable:
    info = {i.match_id: i for i in index}
    per_player: dict[tuple[str, int], dict[str, float]] = defaultdict(dict)
    joint: dict[str, dict[str, float]] = defaultdict(dict)
    ne_class: dict[str, str] = {}
    for r in results:
        if r.match_id not in info:
            raise AnalysisError(f"metric row for unknown match {r.match_id}")
        if r.player == 0:
            joint[r.match_id][r.metric] = r.value
            if r.metric == "stationarity":
                joint[r.match_id]["stable"] = 1.0 if "stable" in r.flags else 0.0
            if r.metric == "ne_convergence":
                ne_class[r.match_id] = next((f[6:] for f in r.flags if f.startswith("class=")), "")
        else:
            per_player[(r.match_id, r.player)][r.metric] = r.value
    keys = sorted(per_player)
    if not keys:
        raise AnalysisError("no per-player metrics")
    names = sorted({k for d in per_player.values() for k in d} | {k for d in joint.values() for k in d})
    cols: dict[str, list] = {k: [] for k in ("match_id", "protagonist", "opponent", "generator", "size", "role", "ne_class")}
    vals: dict[str, list[float]] = {k: [] for k in names}
    for mid, player in keys:
        i = info[mid]
        cols["match_id"].append(mid)
        cols["protagonist"].append(i.row if player == 1 else i.col)
        cols["opponent"].append(i.col if player == 1 else i.row)
        cols["generator"].append(i.generator)
        cols["size"].append(i.rows if player == 1 else i.cols)
        cols["role"].append(player)
        cols["ne_class"].append(ne_class.get(mid, ""))
        merged = dict(joint.get(mid, {}), **per_player[(mid, player)])
        for k in names:
            vals[k].append(merged.get(k, np.nan))
    return ResultsTable(
        np.array(cols["match_id"]),
        np.array(cols["protagonist"]),
        np.array(cols["opponent"]),
        np.array(cols["generator"]),
        np.array(cols["size"], dtype=np.int64),
        np.array(cols["role"], dtype=np.int64),
        {k: np.array(v, dtype=float) for k, v in vals.items()},
        np.array(cols["ne_class"]),
    )


def cell_values(table: ResultsTable, metric: str = "average_reward") -> dict[tuple[str, str], np.ndarray]:
    """Metric values grouped by (protagonist, opponent), in row order."""
    values = table.metric(metric)
    groups: dict[tuple[str, str], list[int]] = defaultdict(list)
    for k, key in enumerate(zip(table.protagonist.tolist(), table.opponent.tolist())):
        groups[key].append(k)
    return {key: values[idx] for key, idx in groups.items()}


# ---------------------------------------------------------------------------
# Algorithm game


@dataclass
class AlgorithmGame:
    algorithms: list[str]
    matrix: np.ndarray  # protagonist x opponent mean reward
    counts: np.ndarray


def build_algorithm_game(table: ResultsTable, algorithms=None, metric: str = "average_reward") -> AlgorithmGame:
    algs = list(algorithms) if algorithms is not None else table.algorithms
    cells = cell_values(table, metric)
    A = len(algs)
    M = np.empty((A, A))
    C = np.zeros((A, A), dtype=np.int64)
    for i, a in enumerate(algs):
        for j, b in enumerate(algs):
            v = cells.get((a, b))
            if v is None or v.size == 0:
                raise AnalysisError(f"no runs for protagonist {a} against {b}")
            M[i, j] = v.mean()
            C[i, j] = v.size
    return AlgorithmGame(algs, M, C)


def subsampled_games(table: ResultsTable, n_subsamples: int = SUBSAMPLES, seed: int = 0, algorithms=None, metric: str = "average_reward") -> tuple[list[str], np.ndarray]:
    """(R, A, A) stack of algorithm games whose cells are means of
    with-replacement half-size resamples of that cell's runs."""
    algs = list(algorithms) if algorithms is not None else table.algorithms
    cells = cell_values(table, metric)
    rng = np.random.default_rng(seed)
    A = len(algs)
    out = np.empty((n_subsamples, A, A))
    for i, a in enumerate(algs):
        for j, b in enumerate(algs):
            v = cells.get((a, b))
            if v is None or v.size < 2:
                raise AnalysisError(f"cell ({a}, {b}) needs at least two runs")
            h = v.size // 2
            idx = rng.integers(0, v.size, size=(n_subsamples, h))
            out[:, i, j] = v[idx].mean(axis=1)
    return algs, out


@dataclass(frozen=True)
class DominationRate:
    algorithm: str
    strict: float
    weak: float

    @property
    def strictly_dominated(self) -> bool:
        return self.strict >= DOMINANCE_LEVEL

    @property
    def weakly_dominated(self) -> bool:
        return self.weak >= DOMINANCE_LEVEL


def domination_flags(games: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per replicate and row: dominated by some other pure row (strict, weak)."""
    R, A, _ = games.shape
    strict = np.zeros((R, A), dtype=bool)
    weak = np.zeros((R, A), dtype=bool)
    for start in range(0, R, _BLOCK):
        g = games[start : start + _BLOCK]
        # diff[r, j, i, c] = g[r, j, c] - g[r, i, c]
        diff = g[:, :, None, :] - g[:, None, :, :]
        off = ~np.eye(A, dtype=bool)[None, :, :]
        s = np.all(diff > 0, axis=3) & off
        w = np.all(diff >= 0, axis=3) & np.any(diff > 0, axis=3) & off
        strict[start : start + _BLOCK] = s.any(axis=1)
        weak[start : start + _BLOCK] = w.any(axis=1)
    return strict, weak


def dominated_algorithms(table: ResultsTable, n_subsamples: int = SUBSAMPLES, seed: int = 0, algorithms=None) -> list[DominationRate]:
    algs, games = subsampled_games(table, n_subsamples, seed, algorithms)
    strict, weak = domination_flags(games)
    return [DominationRate(a, float(strict[:, i].mean()), float(weak[:, i].mean())) for i, a in enumerate(algs)]


def pure_equilibrium_mask(games: np.ndarray) -> np.ndarray:
    """(R, A, A) mask of pure equilibria of the symmetric game (M, M^T).

    Cell (i, j) is an equilibrium when i is a best reply to j and j is a best
    reply to i, each measured by the protagonist's payoff column.
    """
    colmax = games.max(axis=1)  # (R, A): best protagonist payoff against each opponent
    row_ok = games >= colmax[:, None, :]
    return row_ok & np.swapaxes(row_ok, 1, 2)


@dataclass(frozen=True)
class PureEquilibrium:
    row: str
    col: str
    frequency: float

    @property
    def significant(self) -> bool:
        return self.frequency >= DOMINANCE_LEVEL


def pure_equilibria(table: ResultsTable, n_subsamples: int = SUBSAMPLES, seed: int = 0, algorithms=None) -> list[PureEquilibrium]:
    algs, games = subsampled_games(table, n_subsamples, seed, algorithms)
    return pure_equilibria_of_games(algs, games)


def pure_equilibria_of_games(algs: list[str], games: np.ndarray) -> list[PureEquilibrium]:
    freq = pure_equilibrium_mask(games).mean(axis=0)
    out = [PureEquilibrium(algs[i], algs[j], float(freq[i, j])) for i, j in zip(*np.nonzero(freq))]
    out.sort(key=lambda e: (-e.frequency, e.row, e.col))
    return out


# ---------------------------------------------------------------------------
# Best sets


@dataclass(frozen=True)
class BestSet:
    key: str
    members: tuple[str, ...]
    best: str


def _best_set(key: str, samples: dict[str, np.ndarray], k: int, seed: int) -> BestSet:
    if not samples:
        raise AnalysisError(f"no data for {key}")
    names = sorted(samples)
    cis = {a: bootstrap_ci(samples[a], "mean", k=k, seed=seed) for a in names}
    means = {a: float(np.mean(samples[a])) for a in names}
    best = max(names, key=lambda a: (means[a], -names.index(a)))
    members = tuple(a for a in names if a == best or cis[a].overlaps(cis[best]))
    return BestSet(key, members, best)


def best_response_sets(table: ResultsTable, k: int = 2500, seed: int = 0, metric: str = "average_reward") -> list[BestSet]:
    out = []
    for b in table.algorithms:
        sub = table.where(opponent=b)
        samples = {a: sub.where(protagonist=a).metric(metric) for a in sorted(set(sub.protagonist.tolist()))}
        out.append(_best_set(b, samples, k, seed))
    return out


def best_algorithm_sets_per_generator(table: ResultsTable, k: int = 2500, seed: int = 0, metric: str = "average_reward") -> list[BestSet]:
    out = []
    for g in table.generators:
        sub = table.where(generator=g)
        samples = {a: sub.where(protagonist=a).metric(metric) for a in sorted(set(sub.protagonist.tolist()))}
        out.append(_best_set(g, samples, k, seed))
    return out


# ---------------------------------------------------------------------------
# Similarity and correlation


@dataclass
class Similarity:
    algorithms: list[str]
    counts: np.ndarray  # cells where KS did not reject; diagonal 0
    compared: np.ndarray  # cells where both SQDs existed
    skipped: int


def similarity_matrix(table: ResultsTable, metric: str = "average_reward", alpha: float = 0.05) -> Similarity:
    algs = table.algorithms
    sqds: dict[tuple[str, str, str], np.ndarray] = {}
    values = table.metric(metric)
    groups: dict[tuple[str, str, str], list[int]] = defaultdict(list)
    for k, key in enumerate(zip(table.protagonist.tolist(), table.generator.tolist(), table.opponent.tolist())):
        groups[key].append(k)
    for key, idx in groups.items():
        sqds[key] = values[idx]
    cells = sorted({(g, o) for _, g, o in sqds})
    A = len(algs)
    counts = np.zeros((A, A), dtype=np.int64)
    compared = np.zeros((A, A), dtype=np.int64)
    skipped = 0
    for i, j in itertools.combinations(range(A), 2):
        for g, o in cells:
            a = sqds.get((algs[i], g, o))
            b = sqds.get((algs[j], g, o))
            if a is None or b is None:
                skipped += 1
                continue
            compared[i, j] += 1
            if not ks_two_sample(a, b, alpha).reject:
                counts[i, j] += 1
    return Similarity(algs, counts + counts.T, compared + compared.T, skipped)


@dataclass(frozen=True)
class CorrelationCell:
    row: str
    col: str
    rho: float
    p: float
    sign: str  # '+', '-' or 'x' (not significant)
    degenerate: bool = False


def correlation_screens(table: ResultsTable, x: str, y: str, alpha: float = 0.05) -> list[CorrelationCell]:
    """Spearman between two per-run quantities in every (algorithm, generator) block.

    ``x`` and ``y`` name metrics, or ``size`` for the game's action count.
    """

    def column(t: ResultsTable, name: str) -> np.ndarray:
        return t.size.astype(float) if name == "size" else t.metric(name)

    out = []
    for a in table.algorithms:
        for g in table.generators:
            sub = table.where(protagonist=a, generator=g)
            if len(sub) == 0:
                continue
            try:
                r = spearman(column(sub, x), column(sub, y), alpha)
            except DegenerateInputError:
                out.append(CorrelationCell(a, g, float("nan"), float("nan"), "x", True))
                continue
            sign = ("+" if r.rho > 0 else "-") if r.significant else "x"
            out.append(CorrelationCell(a, g, r.rho, r.p, sign))
    return out


# ---------------------------------------------------------------------------
# Summaries


@dataclass(frozen=True)
class SelfPlayContrast:
    algorithm: str
    self_mean: float
    self_ci: tuple[float, float]
    other_mean: float
    other_ci: tuple[float, float]
    dominance: str


def self_play_contrasts(table: ResultsTable, k: int = 2500, seed: int = 0, metric: str = "average_reward") -> list[SelfPlayContrast]:
    out = []
    for a in table.algorithms:
        mine = table.where(protagonist=a)
        s = mine.where(self_play=True).metric(metric)
        o = mine.where(self_play=False).metric(metric)
        if s.size < 2 or o.size < 2:
            continue
        cs = bootstrap_ci(s, k=k, seed=seed)
        co = bootstrap_ci(o, k=k, seed=seed)
        rel = prob_dominance(s, o).relation
        label = {"a_dominates_b": "self_dominates", "b_dominates_a": "other_dominates"}.get(rel, "none")
        out.append(SelfPlayContrast(a, float(s.mean()), (cs.lower, cs.upper), float(o.mean()), (co.lower, co.upper), label))
    return out


def summary_rows(table: ResultsTable) -> list[tuple[str, str, str, float]]:
    """(algorithm, filter, statistic, value) rows: metric means and outcome fractions."""
    rows = []
    for a in table.algorithms:
        for filt, sub in (("all", table.where(protagonist=a)), ("self_play", table.where(protagonist=a, self_play=True))):
            if len(sub) == 0:
                continue
            rows.append((a, filt, "runs", float(len(sub))))
            for name in sorted(sub.values):
                v = sub.values[name]
                v = v[np.isfinite(v)]
                if v.size:
                    rows.append((a, filt, f"mean_{name}", float(v.mean())))
            if "maxmin_distance" in sub.values:
                rows.append((a, filt, "fraction_enforceable", float(np.mean(sub.values["maxmin_distance"] >= 0))))
            labels = sub.ne_class[sub.ne_class != ""]
            for label in sorted(set(labels.tolist())):
                rows.append((a, filt, f"fraction_{label}", float(np.mean(labels == label))))
    return rows


# ---------------------------------------------------------------------------
# CSV tables


def _write(path: Path, schema: str, header: str, rows) -> None:
    lines = [f"#schema={schema}", header] + [",".join(_cell(x) for x in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_heatmap(path, rows) -> None:
    """rows: (row label, column label, value, significance)."""
    _write(Path(path), "heatmap/1", "row,col,value,significance", rows)


def write_cdf(path, rows) -> None:
    """rows: (metric, filter, sorted values)."""
    _write(Path(path), "cdf/1", "metric,filter,values", [(m, f, ";".join(repr(float(x)) for x in np.sort(v))) for m, f, v in rows])


def write_sets(path, rows) -> None:
    """rows: (table, key, member)."""
    _write(Path(path), "sets/1", "table,key,member", rows)


def run_analysis(
    table: ResultsTable,
    out_dir,
    seed: int = 0,
    n_subsamples: int = SUBSAMPLES,
    bootstrap_k: int = 2500,
) -> dict[str, Path]:
    """Write every analysis table into ``out_dir``; returns name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    def p(name: str) -> Path:
        paths[name] = out / f"{name}.csv"
        return paths[name]

    ag = build_algorithm_game(table)
    write_heatmap(
        p("algorithm_game"),
        [(a, b, ag.matrix[i, j], int(ag.counts[i, j])) for i, a in enumerate(ag.algorithms) for j, b in enumerate(ag.algorithms)],
    )
    gen_rows = []
    for a in table.algorithms:
        for g in table.generators:
            v = table.where(protagonist=a, generator=g).metric("average_reward")
            if v.size:
                gen_rows.append((a, g, float(v.mean()), v.size))
    write_heatmap(p("generator_reward"), gen_rows)

    algs, games = subsampled_games(table, n_subsamples, seed)
    strict, weak = domination_flags(games)
    dom_rows = []
    for i, a in enumerate(algs):
        rate = DominationRate(a, float(strict[:, i].mean()), float(weak[:, i].mean()))
        dom_rows.append((a, rate.strict, rate.weak, int(rate.strictly_dominated), int(rate.weakly_dominated)))
    _write(p("dominance"), "dominance/1", "algorithm,strict_fraction,weak_fraction,strictly_dominated,weakly_dominated", dom_rows)
    eqs = pure_equilibria_of_games(algs, games)
    _write(p("pure_equilibria"), "pure_equilibria/1", "row,col,frequency,significant", [(e.row, e.col, e.frequency, int(e.significant)) for e in eqs])

    set_rows = []
    for s in best_response_sets(table, bootstrap_k, seed):
        set_rows += [("best_response", s.key, m) for m in s.members]
    for s in best_algorithm_sets_per_generator(table, bootstrap_k, seed):
        set_rows += [("best_per_generator", s.key, m) for m in s.members]
    write_sets(p("best_sets"), set_rows)

    sim = similarity_matrix(table)
    write_heatmap(
        p("similarity"),
        [(a, b, int(sim.counts[i, j]), int(sim.compared[i, j])) for i, a in enumerate(sim.algorithms) for j, b in enumerate(sim.algorithms) if i != j],
    )

    screens = [("reward_regret", "average_reward", "mean_regret"), ("size_reward", "size", "average_reward"), ("reward_maxmin_distance", "average_reward", "maxmin_distance")]
    for name, x, y in screens:
        if (x == "size" or x in table.values) and y in table.values:
            write_heatmap(p(f"correlation_{name}"), [(c.row, c.col, c.rho, c.sign) for c in correlation_screens(table, x, y)])

    cdf_rows = []
    for a in table.algorithms:
        mine = table.where(protagonist=a)
        for metric in ("average_reward", "mean_regret", "maxmin_distance"):
            if metric in mine.values:
                cdf_rows.append((metric, f"algorithm={a}", mine.metric(metric)))
                s = mine.where(self_play=True)
                if len(s):
                    cdf_rows.append((metric, f"algorithm={a};self_play", s.metric(metric)))
    write_cdf(p("cdf"), cdf_rows)

    contrasts = self_play_contrasts(table, bootstrap_k, seed)
    _write(
        p("self_play"),
        "self_play/1",
        "algorithm,self_mean,self_lower,self_upper,other_mean,other_lower,other_upper,dominance",
        [(c.algorithm, c.self_mean, *c.self_ci, c.other_mean, *c.other_ci, c.dominance) for c in contrasts],
    )
    _write(p("summary"), "summary/1", "algorithm,filter,statistic,value", summary_rows(table))
    return paths
