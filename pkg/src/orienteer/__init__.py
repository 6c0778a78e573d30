"""Score-collecting UAV tour planning: exact lazy-cut ILP, greedy insertion, oracles and benchmarks."""

from .errors import (
    CapacityError,
    CutLimitError,
    InconsistentFlowError,
    InvalidInputError,
    LpStallError,
    OrienteerError,
    SubtourError,
)
from .model import (
    FlowAssignment,
    Instance,
    TimeMatrix,
    Trajectory,
    check_feasible,
    flow_to_trajectory,
    tour_score,
    tour_time,
    trajectory_to_flow,
    travel_time_matrix,
)
from .report import SolveReport
from .greedy import greedy_build
from .exact import lazy_sec_loop
from .oracle import dp_optimal, permutation_bruteforce

__all__ = [
    "CapacityError",
    "CutLimitError",
    "FlowAssignment",
    "InconsistentFlowError",
    "Instance",
    "InvalidInputError",
    "LpStallError",
    "OrienteerError",
    "SolveReport",
    "SubtourError",
    "TimeMatrix",
    "Trajectory",
    "check_feasible",
    "dp_optimal",
    "flow_to_trajectory",
    "greedy_build",
    "lazy_sec_loop",
    "permutation_bruteforce",
    "tour_score",
    "tour_time",
    "trajectory_to_flow",
    "travel_time_matrix",
]
