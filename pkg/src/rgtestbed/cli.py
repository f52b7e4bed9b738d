"""Command-line front end.

    rgtestbed gen-games --config exp.cfg
    rgtestbed gen-jobs  --config exp.cfg
    rgtestbed run       --config exp.cfg --workers 4
    rgtestbed metrics   --config exp.cfg
    rgtestbed analyze   --config exp.cfg

Everything is written below the experiment directory (``out`` in the config,
or ``--out``)::

    games/    gNNNN.game, gNNNN.sol
    agents/   <algorithm>.agent
    jobs/     <match_id>.job
    runs/     <match_id>.csv, <match_id>.beliefs.jsonl, <match_id>.error.json
    metrics/  metrics.csv, matches.csv
    analysis/ *.csv

Exit status: 0 success, 1 partial failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from rgtestbed import engine
from rgtestbed.agents import AgentConfigError, write_agent_config
from rgtestbed.analysis import AnalysisError, build_table, run_analysis
from rgtestbed.config import ConfigError, ExperimentConfig, job_seed, load_config, plan_games
from rgtestbed.games import InvalidGameError, generate, read_game, write_game
from rgtestbed.metrics import (
    MatchInfo,
    MetricError,
    compute_metrics,
    read_index,
    read_metrics,
    write_index,
    write_metrics,
)
from rgtestbed.solvers.solutions import read_solutions

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

log = logging.getLogger("rgtestbed")


def _dirs(out: Path) -> dict[str, Path]:
    return {k: out / k for k in ("games", "agents", "jobs", "runs", "metrics", "analysis")}


def gen_games(cfg: ExperimentConfig) -> list[Path]:
    plans = plan_games(cfg)
    # generate everything before touching the disk so bad configs write nothing
    games = [(p, generate(p.generator, p.size, p.seed)) for p in plans]
    d = _dirs(cfg.out)["games"]
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for plan, g in games:
        gpath = d / f"{plan.name}.game"
        spath = d / f"{plan.name}.sol"
        write_game(g, gpath)
        engine.precompute_solutions(g, spath)
        paths.append(gpath)
    log.info("wrote %d games to %s", len(paths), d)
    return paths


def gen_jobs(cfg: ExperimentConfig) -> list[Path]:
    dirs = _dirs(cfg.out)
    game_paths = sorted(dirs["games"].glob("g*.game"))
    if not game_paths:
        raise ConfigError(f"no games in {dirs['games']}; run gen-games first")
    dirs["agents"].mkdir(parents=True, exist_ok=True)
    agent_paths = {}
    for a in cfg.algorithms:
        path = dirs["agents"] / f"{a}.agent"
        write_agent_config(cfg.agent_config(a), path)
        agent_paths[a] = path
    entries = [engine.GameEntry(int(p.stem[1:]), p, p.with_suffix(".sol")) for p in game_paths]
    jobs = engine.make_jobs(entries, agent_paths, dirs["jobs"], job_seed(cfg), cfg.total_iterations, cfg.recorded_iterations)
    log.info("wrote %d jobs to %s", len(jobs), dirs["jobs"])
    return jobs


def run_jobs(cfg: ExperimentConfig, workers: int) -> list[engine.JobResult]:
    dirs = _dirs(cfg.out)
    jobs = sorted(dirs["jobs"].glob("*.job"))
    results = engine.execute_jobs(jobs, dirs["runs"], workers, cfg.record_beliefs)
    engine.write_report(results, cfg.out / "completion_report.csv")
    for r in results:
        if r.status == "error":
            log.error("job %s failed: %s", r.job_id, r.error.get("message"))
    return results


def _metrics_for_job(args):
    job_path, runs_dir, metrics = args
    job = engine.read_job(job_path)
    run_path = engine.run_output_path(runs_dir, job.match_id)
    if not run_path.exists():
        return job.match_id, None, None
    run = engine.read_run(run_path)
    results = compute_metrics(run, read_game(job.game), read_solutions(job.solutions), metrics)
    return job.match_id, results, MatchInfo.of(run)


def compute_all_metrics(cfg: ExperimentConfig, workers: int) -> tuple[Path, list[str]]:
    """Metrics for every finished run; returns the metrics path and missing match ids."""
    dirs = _dirs(cfg.out)
    jobs = sorted(dirs["jobs"].glob("*.job"))
    tasks = [(p, dirs["runs"], cfg.metrics) for p in jobs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_metrics_for_job, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        done = [_metrics_for_job(t) for t in tasks]
    missing = [mid for mid, res, _ in done if res is None]
    present = [(res, info) for _, res, info in done if res is not None]
    if not present:
        raise MetricError(f"no run records in {dirs['runs']}")
    dirs["metrics"].mkdir(parents=True, exist_ok=True)
    path = dirs["metrics"] / "metrics.csv"
    write_metrics([r for res, _ in present for r in res], path)
    write_index([info for _, info in present], dirs["metrics"] / "matches.csv")
    return path, missing


def analyze(cfg: ExperimentConfig) -> dict[str, Path]:
    dirs = _dirs(cfg.out)
    mpath = dirs["metrics"] / "metrics.csv"
    ipath = dirs["metrics"] / "matches.csv"
    if not mpath.exists() or not ipath.exists():
        raise AnalysisError("metrics missing; run the metrics step first")
    table = build_table(read_metrics(mpath), read_index(ipath))
    return run_analysis(table, dirs["analysis"], cfg.seed, cfg.n_subsamples, cfg.bootstrap_k)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgtestbed", description="Multiagent learning testbed for repeated games.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen-games", "generate game instances and their solution files"),
        ("gen-jobs", "write agent and job files for every match"),
        ("run", "run all jobs that have no output yet"),
        ("metrics", "compute per-run metrics"),
        ("analyze", "write the analysis tables"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="experiment config file")
        p.add_argument("--workers", type=int, default=None, help="worker processes (default: config value)")
        p.add_argument("--seed", type=int, default=None, help="override the experiment seed")
        p.add_argument("--out", type=Path, default=None, help="override the experiment directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        workers = cfg.workers if args.workers is None else args.workers
        if workers < 1:
            raise ConfigError("--workers must be positive")
    except (ConfigError, AgentConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "gen-games":
            gen_games(cfg)
        elif args.command == "gen-jobs":
            gen_jobs(cfg)
        elif args.command == "run":
            results = run_jobs(cfg, workers)
            failed = [r.job_id for r in results if r.status == "error"]
            if failed:
                print(f"{len(failed)} of {len(results)} jobs failed: {', '.join(failed[:20])}", file=sys.stderr)
                return EXIT_PARTIAL
        elif args.command == "metrics":
            _, missing = compute_all_metrics(cfg, workers)
            if missing:
                print(f"partial metrics: {len(missing)} runs missing: {', '.join(missing[:20])}", file=sys.stderr)
                return EXIT_PARTIAL
        elif args.command == "analyze":
            analyze(cfg)
    except (ConfigError, InvalidGameError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MetricError, AnalysisError, engine.JobError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
