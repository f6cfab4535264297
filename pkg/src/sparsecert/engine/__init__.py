"""Optimization backends: dense two-phase simplex and an ADMM-style splitting."""

from .simplex import LinearProgram, SolveReport, Status, solve_lp
from .splitting import SplitProblem, solve_split

__all__ = ["LinearProgram", "SolveReport", "Status", "solve_lp",
           "SplitProblem", "solve_split"]
