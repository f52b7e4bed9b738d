"""Experiment configuration files.

Line-oriented ``key = value`` text.  ``#`` starts a comment, later keys
override earlier ones, and ``include <path>`` splices in another file (paths
relative to the including file)::

    include base.cfg
    seed = 42
    algorithms = fp, q, random
    generators = D1, D4, D7
    sizes = 2, 4
    instances_per_size = 10
    d13_instances = 4
    total_iterations = 10000
    recorded_iterations = 1000
    param.q.gamma = 0.8
    metrics_file = metrics.txt
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from rgtestbed import _rng
from rgtestbed.agents import ALGORITHMS, AgentConfig, AgentConfigError
from rgtestbed.games import GENERATORS
from rgtestbed.metrics import METRICS, MetricError, read_metric_list

# spawn-key roots for experiment-level streams
GAME_PLAN_KEY = 1000
GAME_SEED_KEY = 1001
JOB_SEED_KEY = 1002


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    generators: list[str] = field(default_factory=lambda: [f"D{i}" for i in range(1, 13)])
    sizes: list[int] = field(default_factory=lambda: [2, 4])
    instances_per_size: int = 1
    d13_instances: int = 0
    total_iterations: int = 100_000
    recorded_iterations: int = 10_000
    workers: int = 1
    out: Path = Path("experiment")
    record_beliefs: bool = True
    metrics: tuple[str, ...] = METRICS
    n_subsamples: int = 10_000
    bootstrap_k: int = 2500
    agent_params: dict[str, dict[str, float]] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms listed twice")
        for g in self.generators:
            if g not in GENERATORS or g == "D13":
                raise ConfigError(f"unknown or misplaced generator {g!r} (D13 is configured via d13_instances)")
        for s in self.sizes:
            if s < 1:
                raise ConfigError("sizes must be positive")
        if self.instances_per_size < 0 or self.d13_instances < 0:
            raise ConfigError("instance counts must be non-negative")
        if self.instances_per_size and not (self.generators and self.sizes):
            raise ConfigError("instances_per_size needs generators and sizes")
        if self.instances_per_size * len(self.sizes) + self.d13_instances == 0:
            raise ConfigError("the experiment has no game instances")
        if not 1 <= self.recorded_iterations <= self.total_iterations:
            raise ConfigError("need 1 <= recorded_iterations <= total_iterations")
        if self.workers < 1 or self.n_subsamples < 1 or self.bootstrap_k < 1:
            raise ConfigError("workers, n_subsamples and bootstrap_k must be positive")
        for a, params in self.agent_params.items():
            if a not in self.algorithms:
                raise ConfigError(f"parameters given for unused algorithm {a!r}")
            try:
                AgentConfig(a, params)
            except AgentConfigError as exc:
                raise ConfigError(str(exc)) from None

    def agent_config(self, algorithm: str) -> AgentConfig:
        return AgentConfig(algorithm, self.agent_params.get(algorithm, {}))


@dataclass(frozen=True)
class GamePlan:
    index: int
    generator: str
    size: int
    seed: int

    @property
    def name(self) -> str:
        return f"g{self.index:04d}"


def plan_games(cfg: ExperimentConfig) -> list[GamePlan]:
    """Per size, ``instances_per_size`` generators drawn uniformly; then D13."""
    plans = []
    idx = 0
    for size in cfg.sizes:
        rng = _rng.stream(cfg.seed, GAME_PLAN_KEY, size)
        picks = rng.integers(0, len(cfg.generators), size=cfg.instances_per_size) if cfg.generators else []
        for k in picks:
            plans.append(GamePlan(idx, cfg.generators[int(k)], size, _rng.derive_seed(cfg.seed, GAME_SEED_KEY, idx)))
            idx += 1
    for _ in range(cfg.d13_instances):
        plans.append(GamePlan(idx, "D13", 2, _rng.derive_seed(cfg.seed, GAME_SEED_KEY, idx)))
        idx += 1
    return plans


def job_seed(cfg: ExperimentConfig) -> int:
    return _rng.derive_seed(cfg.seed, JOB_SEED_KEY)


# ---------------------------------------------------------------------------
# Parsing


def read_pairs(path, _seen=None) -> list[tuple[str, str, Path]]:
    """(key, value, defining file) triples in file order, includes expanded."""
    path = Path(path).resolve()
    seen = set() if _seen is None else _seen
    if path in seen:
        raise ConfigError(f"include cycle through {path}")
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    seen = seen | {path}
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include "):
            out += read_pairs(path.parent / line[len("include ") :].strip(), seen)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path.name}:{lineno}: expected 'key = value' or 'include <path>'")
        out.append((key.strip(), value.strip(), path))
    return out


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_INT_KEYS = ("seed", "instances_per_size", "d13_instances", "total_iterations", "recorded_iterations", "workers", "n_subsamples", "bootstrap_k")


def load_config(path) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for key, value, origin in read_pairs(path):
        try:
            if key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key == "algorithms":
                cfg.algorithms = _list(value)
            elif key == "generators":
                cfg.generators = _list(value)
            elif key == "sizes":
                cfg.sizes = [int(v) for v in _list(value)]
            elif key == "out":
                cfg.out = origin.parent / value
            elif key == "record_beliefs":
                cfg.record_beliefs = _bool(value)
            elif key == "metrics":
                cfg.metrics = tuple(_list(value))
            elif key == "metrics_file":
                cfg.metrics = read_metric_list(origin.parent / value)
            elif key.startswith("param."):
                _, alg, name = key.split(".", 2)
                cfg.agent_params.setdefault(alg, {})[name] = float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except (ValueError, MetricError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    unknown = set(cfg.metrics) - set(METRICS)
    if unknown:
        raise ConfigError(f"unknown metrics: {', '.join(sorted(unknown))}")
    cfg.validate()
    return cfg
