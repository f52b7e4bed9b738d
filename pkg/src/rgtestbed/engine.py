"""Match execution, run records and job management.

A job file is a key-value text file::

    match_id: g0007_fp_vs_q
    row_agent: ../agents/fp.agent
    col_agent: ../agents/q.agent
    game: ../games/g0007.game
    solutions: ../games/g0007.sol
    seed: 8761234
    total_iterations: 100000
    recorded_iterations: 10000

Relative paths are resolved against the job file's directory.  Running a job
writes ``<match_id>.csv`` (the run record) and ``<match_id>.beliefs.jsonl``
into the output directory, or ``<match_id>.error.json`` on failure.

Iterations are numbered from 0; that ``t`` is what agents see and what the
``iter`` column holds.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rgtestbed import _rng
from rgtestbed.agents import AgentConfig, GameView, read_agent_config
from rgtestbed.games import Game, read_game
from rgtestbed.solvers.solutions import Solutions, compute_solutions, read_solutions, write_solutions

RUN_SCHEMA = "runrecord/1"
REPORT_SCHEMA = "completion/1"
RUN_HEADER = "iter,p1_strategy,p1_action,p1_reward,p2_strategy,p2_action,p2_reward"
DEFAULT_TOTAL = 100_000
DEFAULT_RECORDED = 10_000


class JobError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Job specs


@dataclass
class JobSpec:
    match_id: str
    row_agent: Path
    col_agent: Path
    game: Path
    solutions: Path | None
    seed: int
    total_iterations: int = DEFAULT_TOTAL
    recorded_iterations: int = DEFAULT_RECORDED

    def __post_init__(self):
        if not 1 <= self.recorded_iterations <= self.total_iterations:
            raise JobError("need 1 <= recorded_iterations <= total_iterations")


_PATH_KEYS = ("row_agent", "col_agent", "game", "solutions")


def format_job(job: JobSpec, base: Path | None = None) -> str:
    lines = [f"match_id: {job.match_id}"]
    for key in _PATH_KEYS:
        value = getattr(job, key)
        if value is None:
            continue
        p = Path(value)
        if base is not None:
            p = Path(os.path.relpath(p.resolve(), base.resolve()))
        lines.append(f"{key}: {p.as_posix()}")
    lines += [
        f"seed: {job.seed}",
        f"total_iterations: {job.total_iterations}",
        f"recorded_iterations: {job.recorded_iterations}",
    ]
    return "\n".join(lines) + "\n"


def write_job(job: JobSpec, path) -> None:
    path = Path(path)
    path.write_text(format_job(job, path.parent), encoding="utf-8")


def parse_job(text: str, base: Path | None = None) -> JobSpec:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise JobError(f"bad job line {raw!r}")
        fields[key.strip()] = value.strip()
    try:
        paths = {}
        for key in _PATH_KEYS:
            if key in fields:
                p = Path(fields[key])
                paths[key] = p if base is None or p.is_absolute() else base / p
        return JobSpec(
            match_id=fields["match_id"],
            row_agent=paths["row_agent"],
            col_agent=paths["col_agent"],
            game=paths["game"],
            solutions=paths.get("solutions"),
            seed=int(fields["seed"]),
            total_iterations=int(fields.get("total_iterations", DEFAULT_TOTAL)),
            recorded_iterations=int(fields.get("recorded_iterations", DEFAULT_RECORDED)),
        )
    except KeyError as exc:
        raise JobError(f"job file lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise JobError(str(exc)) from None


def read_job(path) -> JobSpec:
    path = Path(path)
    return parse_job(path.read_text(encoding="utf-8"), path.parent)


# ---------------------------------------------------------------------------
# Run records


@dataclass
class RunRecord:
    match_id: str
    row_algorithm: str
    col_algorithm: str
    generator: str
    shape: tuple[int, int]
    seed: int
    total_iterations: int
    iters: np.ndarray
    p1_strategy: np.ndarray
    p1_action: np.ndarray
    p1_reward: np.ndarray
    p2_strategy: np.ndarray
    p2_action: np.ndarray
    p2_reward: np.ndarray
    beliefs: list | None = None
    final_reports: tuple | None = None

    @property
    def recorded(self) -> int:
        return len(self.iters)

    def rewards(self, player: int) -> np.ndarray:
        return self.p1_reward if player == 1 else self.p2_reward

    def actions(self, player: int) -> np.ndarray:
        return self.p1_action if player == 1 else self.p2_action

    def strategies(self, player: int) -> np.ndarray:
        return self.p1_strategy if player == 1 else self.p2_strategy

    def same_as(self, other: RunRecord) -> bool:
        return (
            self.match_id == other.match_id
            and self.seed == other.seed
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("iters", "p1_strategy", "p1_action", "p1_reward", "p2_strategy", "p2_action", "p2_reward")
            )
        )


def _g(x: float) -> str:
    return format(x, ".17g")


def format_run(rec: RunRecord) -> str:
    m, n = rec.shape
    head = (
        f"#schema={RUN_SCHEMA} match_id={rec.match_id} row={rec.row_algorithm} col={rec.col_algorithm}"
        f" generator={rec.generator} rows={m} cols={n} seed={rec.seed} total={rec.total_iterations}"
    )
    out = [head, RUN_HEADER]
    s1 = rec.p1_strategy.tolist()
    s2 = rec.p2_strategy.tolist()
    a1 = rec.p1_action.tolist()
    a2 = rec.p2_action.tolist()
    r1 = rec.p1_reward.tolist()
    r2 = rec.p2_reward.tolist()
    cache: dict[tuple, str] = {}

    def strat(v):
        key = tuple(v)
        s = cache.get(key)
        if s is None:
            s = cache[key] = ";".join(map(_g, v))
        return s

    for k, t in enumerate(rec.iters.tolist()):
        out.append(f"{t},{strat(s1[k])},{a1[k]},{_g(r1[k])},{strat(s2[k])},{a2[k]},{_g(r2[k])}")
    return "\n".join(out) + "\n"


def parse_run(text: str) -> RunRecord:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#schema="):
        raise JobError("run record lacks a schema line")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    if meta.get("schema") != RUN_SCHEMA:
        raise JobError(f"unsupported run schema {meta.get('schema')!r}")
    if lines[1] != RUN_HEADER:
        raise JobError("unexpected run record header")
    m, n = int(meta["rows"]), int(meta["cols"])
    body = [line.split(",") for line in lines[2:] if line]
    R = len(body)
    iters = np.empty(R, dtype=np.int64)
    a1 = np.empty(R, dtype=np.int64)
    a2 = np.empty(R, dtype=np.int64)
    r1 = np.empty(R)
    r2 = np.empty(R)
    s1 = np.empty((R, m))
    s2 = np.empty((R, n))
    for k, f in enumerate(body):
        iters[k] = int(f[0])
        s1[k] = [float(x) for x in f[1].split(";")]
        a1[k] = int(f[2])
        r1[k] = float(f[3])
        s2[k] = [float(x) for x in f[4].split(";")]
        a2[k] = int(f[5])
        r2[k] = float(f[6])
    return RunRecord(
        match_id=meta["match_id"],
        row_algorithm=meta["row"],
        col_algorithm=meta["col"],
        generator=meta["generator"],
        shape=(m, n),
        seed=int(meta["seed"]),
        total_iterations=int(meta["total"]),
        iters=iters,
        p1_strategy=s1,
        p1_action=a1,
        p1_reward=r1,
        p2_strategy=s2,
        p2_action=a2,
        p2_reward=r2,
    )


def read_run(path) -> RunRecord:
    return parse_run(Path(path).read_text(encoding="utf-8"))


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_run(rec: RunRecord, path) -> None:
    _atomic_write(Path(path), format_run(rec))


def format_beliefs(rec: RunRecord) -> str:
    lines = []
    if rec.beliefs is not None:
        for t, (b1, b2) in zip(rec.iters.tolist(), rec.beliefs):
            lines.append(json.dumps({"iter": t, "p1": b1, "p2": b2}, sort_keys=True))
    if rec.final_reports is not None:
        f1, f2 = rec.final_reports
        lines.append(json.dumps({"final": True, "p1": f1, "p2": f2}, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Simulation


def make_view(game: Game, role: int, info, poison: bool = False) -> GameView:
    """What an agent with information model ``info`` may see.

    Withheld matrices are ``None``, or all-NaN when ``poison`` is set, so a
    test harness can check that nothing withheld is ever read.
    """
    own, opp = game.own_view(role)
    n_own, n_opp = own.shape

    def hidden(shape):
        return np.full(shape, np.nan) if poison else None

    return GameView(
        role=role,
        n_own=n_own,
        n_opp=n_opp,
        own=own if info.own_payoffs else hidden(own.shape),
        opp=opp if info.opponent_payoffs else hidden(opp.shape),
    )


def simulate(
    game: Game,
    row: AgentConfig,
    col: AgentConfig,
    seed: int,
    solutions: Solutions | None = None,
    total_iterations: int = DEFAULT_TOTAL,
    recorded_iterations: int = DEFAULT_RECORDED,
    match_id: str = "match",
    record_beliefs: bool = True,
    poison: bool = False,
) -> RunRecord:
    """Play one match and return the record of its last ``recorded_iterations``."""
    if not 1 <= recorded_iterations <= total_iterations:
        raise JobError("need 1 <= recorded_iterations <= total_iterations")
    if (row.info.solutions or col.info.solutions) and solutions is None:
        solutions = compute_solutions(game)
    m, n = game.shape
    agent1 = row.build(make_view(game, 1, row.info, poison), _rng.stream(seed, _rng.ROW_AGENT), solutions)
    agent2 = col.build(make_view(game, 2, col.info, poison), _rng.stream(seed, _rng.COL_AGENT), solutions)
    draws1 = _rng.stream(seed, _rng.ROW_SAMPLER).random(total_iterations).tolist()
    draws2 = _rng.stream(seed, _rng.COL_SAMPLER).random(total_iterations).tolist()
    U1 = game.u1.tolist()
    U2 = game.u2.tolist()
    see1 = agent1.info.opponent_actions
    see2 = agent2.info.opponent_actions

    R = recorded_iterations
    start = total_iterations - R
    strat1: list = [None] * R
    strat2: list = [None] * R
    act1 = np.empty(R, dtype=np.int64)
    act2 = np.empty(R, dtype=np.int64)
    rew1 = np.empty(R)
    rew2 = np.empty(R)
    beliefs: list | None = [] if record_beliefs else None

    act_1, act_2 = agent1.act, agent2.act
    obs_1, obs_2 = agent1.observe, agent2.observe
    searchsorted = np.searchsorted
    last1 = last2 = None
    cs1 = cs2 = None
    for t in range(total_iterations):
        s1 = act_1(t)
        s2 = act_2(t)
        if s1 is not last1:
            last1, cs1 = s1, np.cumsum(s1)
        if s2 is not last2:
            last2, cs2 = s2, np.cumsum(s2)
        i = int(searchsorted(cs1, draws1[t], "right"))
        j = int(searchsorted(cs2, draws2[t], "right"))
        if i >= m:
            i = m - 1
        if j >= n:
            j = n - 1
        r1 = U1[i][j]
        r2 = U2[i][j]
        obs_1(t, i, j if see1 else None, r1)
        obs_2(t, j, i if see2 else None, r2)
        if t >= start:
            k = t - start
            strat1[k] = s1
            strat2[k] = s2
            act1[k] = i
            act2[k] = j
            rew1[k] = r1
            rew2[k] = r2
            if beliefs is not None:
                beliefs.append((agent1.beliefs(), agent2.beliefs()))

    return RunRecord(
        match_id=match_id,
        row_algorithm=row.algorithm,
        col_algorithm=col.algorithm,
        generator=game.generator_id,
        shape=(m, n),
        seed=seed,
        total_iterations=total_iterations,
        iters=np.arange(start, total_iterations, dtype=np.int64),
        p1_strategy=np.array(strat1, dtype=float).reshape(R, m),
        p1_action=act1,
        p1_reward=rew1,
        p2_strategy=np.array(strat2, dtype=float).reshape(R, n),
        p2_action=act2,
        p2_reward=rew2,
        beliefs=beliefs,
        final_reports=(agent1.final_report(), agent2.final_report()) if record_beliefs else None,
    )


def precompute_solutions(game: Game, path) -> Solutions:
    sol = compute_solutions(game)
    write_solutions(sol, path)
    return sol


def run_match(job: JobSpec, record_beliefs: bool = True) -> RunRecord:
    for key in _PATH_KEYS:
        p = getattr(job, key)
        if p is not None and not Path(p).exists():
            raise JobError(f"{key} file {p} does not exist")
    row = read_agent_config(job.row_agent)
    col = read_agent_config(job.col_agent)
    game = read_game(job.game)
    solutions = None
    if row.info.solutions or col.info.solutions:
        if job.solutions is None:
            raise JobError("an agent needs precomputed solutions but the job names none")
        solutions = read_solutions(job.solutions)
    return simulate(
        game,
        row,
        col,
        job.seed,
        solutions,
        job.total_iterations,
        job.recorded_iterations,
        match_id=job.match_id,
        record_beliefs=record_beliefs,
    )


# ---------------------------------------------------------------------------
# Job sets


def match_id(game_index: int, row: str, col: str) -> str:
    return f"g{game_index:04d}_{row}_vs_{col}"


@dataclass
class GameEntry:
    index: int
    game_path: Path
    solutions_path: Path


def make_jobs(
    games: list[GameEntry],
    agent_paths: dict[str, Path],
    jobs_dir,
    seed: int,
    total_iterations: int = DEFAULT_TOTAL,
    recorded_iterations: int = DEFAULT_RECORDED,
) -> list[Path]:
    """One job per ordered algorithm pair per game, self-play included."""
    jobs_dir = Path(jobs_dir)
    jobs_dir.mkdir(parents=True, exist_ok=True)
    names = list(agent_paths)
    out = []
    for g in games:
        for ri, row in enumerate(names):
            for ci, col in enumerate(names):
                job = JobSpec(
                    match_id=match_id(g.index, row, col),
                    row_agent=agent_paths[row],
                    col_agent=agent_paths[col],
                    game=g.game_path,
                    solutions=g.solutions_path,
                    seed=_rng.derive_seed(seed, g.index, ri, ci),
                    total_iterations=total_iterations,
                    recorded_iterations=recorded_iterations,
                )
                path = jobs_dir / f"{job.match_id}.job"
                write_job(job, path)
                out.append(path)
    return out


@dataclass
class JobResult:
    job_id: str
    status: str  # ok | skipped | error
    wall_time: float
    error: dict = field(default_factory=dict)


def run_output_path(out_dir, match: str) -> Path:
    return Path(out_dir) / f"{match}.csv"


def _job_id(job_path: Path) -> str:
    return Path(job_path).stem


def run_job_file(job_path, out_dir, record_beliefs: bool = True) -> JobResult:
    """Run one job file, writing its outputs; never raises for job failures."""
    job_path = Path(job_path)
    out_dir = Path(out_dir)
    job_id = _job_id(job_path)
    if run_output_path(out_dir, job_id).exists():
        return JobResult(job_id, "skipped", 0.0)
    started = time.perf_counter()
    err_path = out_dir / f"{job_id}.error.json"
    try:
        job = read_job(job_path)
        rec = run_match(job, record_beliefs=record_beliefs)
        if record_beliefs:
            _atomic_write(out_dir / f"{job.match_id}.beliefs.jsonl", format_beliefs(rec))
        write_run(rec, run_output_path(out_dir, job.match_id))
        if err_path.exists():
            err_path.unlink()
        return JobResult(job_id, "ok", time.perf_counter() - started)
    except Exception as exc:  # isolate every job failure
        error = {
            "job_id": job_id,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "traceback": traceback.format_exc(limit=5),
        }
        _atomic_write(err_path, json.dumps(error, indent=1, sort_keys=True) + "\n")
        return JobResult(job_id, "error", time.perf_counter() - started, error)


def _run_star(args) -> JobResult:
    return run_job_file(*args)


def execute_jobs(job_paths, out_dir, worker_count: int = 1, record_beliefs: bool = True) -> list[JobResult]:
    """Run every job, in parallel when ``worker_count`` > 1.

    Outputs do not depend on the worker count or scheduling order.  The
    completion report lists results in job order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(Path(p), out_dir, record_beliefs) for p in job_paths]
    if worker_count <= 1 or len(tasks) <= 1:
        results = [_run_star(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=worker_count) as pool:
            results = list(pool.map(_run_star, tasks, chunksize=max(1, len(tasks) // (8 * worker_count))))
    return results


def format_report(results: list[JobResult]) -> str:
    lines = [f"#schema={REPORT_SCHEMA}", "job_id,status,wall_time"]
    lines += [f"{r.job_id},{r.status},{r.wall_time:.6f}" for r in results]
    return "\n".join(lines) + "\n"


def write_report(results: list[JobResult], path) -> None:
    _atomic_write(Path(path), format_report(results))
