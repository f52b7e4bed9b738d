from rgtestbed.solvers.equilibria import (
    EquilibriumProfile,
    EquilibriumSet,
    enumerate_equilibria,
    is_nash,
    nash_gap,
    select_determined_equilibrium,
    support_enumeration,
)
from rgtestbed.solvers.lemke_howson import DegenerateGameError, lemke_howson
from rgtestbed.solvers.lp import MaxminSolution, iterated_dominance_removal, maxmin, solve_maxmin
from rgtestbed.solvers.simplex import normalize_to_simplex, project_to_simplex
from rgtestbed.solvers.solutions import Solutions, compute_solutions, read_solutions, write_solutions

__all__ = [
    "DegenerateGameError",
    "EquilibriumProfile",
    "EquilibriumSet",
    "MaxminSolution",
    "Solutions",
    "compute_solutions",
    "enumerate_equilibria",
    "is_nash",
    "iterated_dominance_removal",
    "lemke_howson",
    "maxmin",
    "nash_gap",
    "normalize_to_simplex",
    "project_to_simplex",
    "read_solutions",
    "select_determined_equilibrium",
    "solve_maxmin",
    "support_enumeration",
    "write_solutions",
]
