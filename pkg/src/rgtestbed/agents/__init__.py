"""Learning agents and their configuration files.

Config file format::

    algorithm: giga_wolf
    param eta_slope = 10000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from rgtestbed.agents.awesome import Awesome
from rgtestbed.agents.base import (
    Agent,
    AgentError,
    AgentObservation,
    GameView,
    InfoModel,
)
from rgtestbed.agents.gradient import GSA, GigaWolf, RVSigma
from rgtestbed.agents.meta import Meta
from rgtestbed.agents.qlearning import MinimaxQ, MinimaxQIDR, QLearner
from rgtestbed.agents.simple import Determined, FictitiousPlay, RandomAgent

REGISTRY: dict[str, type[Agent]] = {
    cls.algorithm: cls
    for cls in (
        Awesome,
        Determined,
        FictitiousPlay,
        GigaWolf,
        GSA,
        Meta,
        MinimaxQ,
        MinimaxQIDR,
        QLearner,
        RandomAgent,
        RVSigma,
    )
}
ALGORITHMS = tuple(sorted(REGISTRY))


class AgentConfigError(AgentError):
    pass


def agent_class(algorithm: str) -> type[Agent]:
    try:
        return REGISTRY[algorithm]
    except KeyError:
        raise AgentConfigError(f"unknown algorithm {algorithm!r}; known: {', '.join(ALGORITHMS)}") from None


@dataclass
class AgentConfig:
    algorithm: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        cls = agent_class(self.algorithm)
        try:
            self.params = cls.resolve_params(self.params)
        except AgentError as exc:
            raise AgentConfigError(str(exc)) from None

    @property
    def info(self) -> InfoModel:
        return REGISTRY[self.algorithm].info

    def build(self, view: GameView, rng, solutions=None) -> Agent:
        return REGISTRY[self.algorithm](view, rng, solutions, self.params)


def parse_agent_config(text: str) -> AgentConfig:
    algorithm = None
    params: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("algorithm:"):
            algorithm = line.split(":", 1)[1].strip()
        elif line.startswith("param "):
            name, sep, value = line[len("param ") :].partition("=")
            if not sep:
                raise AgentConfigError(f"line {lineno}: expected 'param <name> = <value>'")
            try:
                params[name.strip()] = float(value)
            except ValueError:
                raise AgentConfigError(f"line {lineno}: bad value {value.strip()!r}") from None
        else:
            raise AgentConfigError(f"line {lineno}: unrecognised line {raw!r}")
    if algorithm is None:
        raise AgentConfigError("missing 'algorithm:' line")
    return AgentConfig(algorithm, params)


def format_agent_config(cfg: AgentConfig) -> str:
    lines = [f"algorithm: {cfg.algorithm}"]
    lines += [f"param {k} = {v!r}" for k, v in sorted(cfg.params.items())]
    return "\n".join(lines) + "\n"


def read_agent_config(path) -> AgentConfig:
    return parse_agent_config(Path(path).read_text(encoding="utf-8"))


def write_agent_config(cfg: AgentConfig, path) -> None:
    Path(path).write_text(format_agent_config(cfg), encoding="utf-8")


__all__ = [
    "ALGORITHMS",
    "Agent",
    "AgentConfig",
    "AgentConfigError",
    "AgentError",
    "AgentObservation",
    "GameView",
    "InfoModel",
    "REGISTRY",
    "agent_class",
    "format_agent_config",
    "parse_agent_config",
    "read_agent_config",
    "write_agent_config",
]
