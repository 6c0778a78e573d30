"""Exact solver: 0-1 flow model, simplex bounds, branch-and-bound, lazy subtour cuts."""

from .ilp import IlpModel, SecCut, build_model, find_subtours
from .simplex import LpResult, solve_lp
from .solver import BACKENDS, BnbResult, branch_and_bound, highs_round, lazy_sec_loop, solve_lp_relaxation

__all__ = [
    "BACKENDS",
    "BnbResult",
    "IlpModel",
    "LpResult",
    "SecCut",
    "branch_and_bound",
    "build_model",
    "find_subtours",
    "highs_round",
    "lazy_sec_loop",
    "solve_lp",
    "solve_lp_relaxation",
]
