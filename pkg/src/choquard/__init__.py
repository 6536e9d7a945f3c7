"""Numerical laboratory for Choquard equations with symmetry on exterior domains."""

from .energy import Problem
from .grid import Grid
from .groundstate import DecayLawFit, GroundState, GroundStateSolver, fit_decay, solve_limit
from .potential import Potential
from .solver import EquivariantSolver, SolveReport, certify, minimize
from .symmetry import SymmetryGroup

__version__ = "0.1.0"

__all__ = [
    "Grid", "Problem", "Potential", "SymmetryGroup", "GroundState", "GroundStateSolver", "DecayLawFit",
    "fit_decay", "solve_limit", "EquivariantSolver", "SolveReport", "certify", "minimize",
]
