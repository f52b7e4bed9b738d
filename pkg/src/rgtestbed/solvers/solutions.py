"""Precomputed per-game solutions and their text file format.

    status complete|possibly_incomplete
    maxmin <player> <value> <probs...>
    eq <s1 probs...> | <s2 probs...> <pay1> <pay2> <pareto:0|1>

Equilibrium lines keep enumeration order, so the first ``eq`` line is the
"first found" equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rgtestbed.games import Game
from rgtestbed.solvers.equilibria import EquilibriumProfile, EquilibriumSet, enumerate_equilibria
from rgtestbed.solvers.lp import MaxminSolution, solve_maxmin


class SolutionFileError(ValueError):
    pass


@dataclass
class Solutions:
    equilibria: EquilibriumSet
    maxmin: dict[int, MaxminSolution]


def compute_solutions(g: Game) -> Solutions:
    return Solutions(enumerate_equilibria(g), {1: solve_maxmin(g, 1), 2: solve_maxmin(g, 2)})


def _f(x) -> str:
    return format(float(x), ".17g")


def format_solutions(sol: Solutions) -> str:
    lines = ["status " + ("possibly_incomplete" if sol.equilibria.possibly_incomplete else "complete")]
    for player in (1, 2):
        mm = sol.maxmin[player]
        lines.append(f"maxmin {player} {_f(mm.value)} " + " ".join(_f(p) for p in mm.strategy))
    for eq in sol.equilibria:
        lines.append(
            "eq "
            + " ".join(_f(p) for p in eq.s1)
            + " | "
            + " ".join(_f(p) for p in eq.s2)
            + f" {_f(eq.payoff1)} {_f(eq.payoff2)} {int(eq.pareto_optimal)}"
        )
    return "\n".join(lines) + "\n"


def parse_solutions(text: str) -> Solutions:
    eqs = EquilibriumSet()
    maxmin: dict[int, MaxminSolution] = {}
    try:
        for line in text.splitlines():
            if not line.strip():
                continue
            kind, _, rest = line.partition(" ")
            if kind == "status":
                eqs.possibly_incomplete = rest.strip() == "possibly_incomplete"
            elif kind == "maxmin":
                fields = rest.split()
                maxmin[int(fields[0])] = MaxminSolution(np.array([float(x) for x in fields[2:]]), float(fields[1]))
            elif kind == "eq":
                left, right = rest.split("|")
                s1 = np.array([float(x) for x in left.split()])
                tail = right.split()
                s2 = np.array([float(x) for x in tail[:-3]])
                eqs.profiles.append(EquilibriumProfile(s1, s2, float(tail[-3]), float(tail[-2]), tail[-1] == "1"))
            else:
                raise SolutionFileError(f"unknown line type {kind!r}")
    except (ValueError, IndexError) as exc:
        raise SolutionFileError(f"malformed solution file: {exc}") from exc
    if set(maxmin) != {1, 2}:
        raise SolutionFileError("solution file needs maxmin lines for both players")
    return Solutions(eqs, maxmin)


def write_solutions(sol: Solutions, path) -> None:
    Path(path).write_text(format_solutions(sol), encoding="utf-8")


def read_solutions(path) -> Solutions:
    return parse_solutions(Path(path).read_text(encoding="utf-8"))
