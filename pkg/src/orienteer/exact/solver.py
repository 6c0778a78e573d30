"""Depth-first branch-and-bound on the arc variables and the lazy subtour loop around it."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..errors import CutLimitError, InvalidInputError, LpStallError
from ..greedy import greedy_build
from ..model import (
    FlowAssignment,
    Instance,
    TimeMatrix,
    Trajectory,
    flow_to_trajectory,
    trajectory_to_flow,
)
from ..report import SolveReport
from .highs import highs_round
from .ilp import IlpModel, build_model, find_subtours
from .simplex import LpResult, solve_lp

log = logging.getLogger(__name__)

BACKENDS = ("builtin", "highs")
INT_TOL = 1e-6
PRUNE_TOL = 1e-9


def solve_lp_relaxation(model: IlpModel, lo=None, hi=None, rule: str = "dantzig") -> LpResult:
    """Continuous relaxation of the current model under optional variable fixings."""
    lo = np.zeros(model.num_vars) if lo is None else lo
    hi = model.upper if hi is None else np.minimum(hi, model.upper)
    return solve_lp(model.c, model.A_ub, model.b_ub, model.A_eq, model.b_eq, lo, hi, rule=rule)


@dataclass
class BnbResult:
    flow: FlowAssignment | None
    objective: float
    status: str  # "optimal", "infeasible" or "time_limit"
    nodes_explored: int
    root_bound: float


def branch_and_bound(
    model: IlpModel,
    incumbent: FlowAssignment | None = None,
    deadline: float | None = None,
    rule: str = "dantzig",
) -> BnbResult:
    """Optimal integer point of the current model.

    Branches on the most fractional arc (lowest index on ties), 1-branch
    first. ``incumbent`` must be feasible for the model; nodes whose bound does
    not beat it are pruned. ``deadline`` is a ``time.monotonic()`` value.
    """
    nv = model.num_vars
    if nv == 0:
        return BnbResult(FlowAssignment.zeros(model.n), 0.0, "optimal", 0, 0.0)
    A_ub, b_ub = model.A_ub, model.b_ub
    best_x, best_obj = None, -np.inf
    if incumbent is not None:
        best_x = model.vector_from_flow(incumbent)
        best_obj = model.objective(best_x)
    zero = np.zeros(nv)
    if best_x is None and model.is_feasible_point(zero):
        best_x, best_obj = zero, 0.0

    stack = [(np.zeros(nv), model.upper.copy())]
    nodes = 0
    root_bound = np.inf
    status = "optimal"
    while stack:
        if deadline is not None and time.monotonic() > deadline:
            status = "time_limit"
            break
        lo, hi = stack.pop()
        nodes += 1
        try:
            res = solve_lp(model.c, A_ub, b_ub, model.A_eq, model.b_eq, lo, hi, rule=rule)
        except LpStallError:
            # no trustworthy bound: branch on the first free arc
            free = np.flatnonzero(lo < hi)
            if free.size == 0:
                if model.is_feasible_point(lo) and model.objective(lo) > best_obj + PRUNE_TOL:
                    best_x, best_obj = lo.copy(), model.objective(lo)
                continue
            _push_children(stack, lo, hi, int(free[0]))
            continue
        if nodes == 1:
            root_bound = res.objective if res.status == "optimal" else -np.inf
        if res.status != "optimal" or res.objective <= best_obj + PRUNE_TOL:
            continue
        x = res.x
        frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
        k = int(np.argmax(frac))
        if frac[k] <= INT_TOL:
            xr = np.round(x)
            if model.is_feasible_point(xr):
                obj = model.objective(xr)
                if obj > best_obj + PRUNE_TOL:
                    best_x, best_obj = xr, obj
                continue
            # rounding broke a row: branch on whatever is not exactly integral
            off = np.flatnonzero((x != xr) & (lo < hi))
            if off.size == 0:
                continue
            k = int(off[np.argmax(frac[off])])
        _push_children(stack, lo, hi, k)

    if best_x is None:
        return BnbResult(None, -np.inf, "infeasible" if status == "optimal" else status, nodes, root_bound)
    return BnbResult(model.flow_from_vector(best_x), best_obj, status, nodes, root_bound)


def _push_children(stack, lo, hi, k):
    lo0, hi0 = lo.copy(), hi.copy()
    hi0[k] = 0.0
    lo1, hi1 = lo.copy(), hi.copy()
    lo1[k] = 1.0
    stack.append((lo0, hi0))
    stack.append((lo1, hi1))  # popped first


def _depot_tour(flow: FlowAssignment, depot: int) -> Trajectory:
    """Tour through the depot, ignoring any detached cycles."""
    succ = dict(flow.arcs())
    if depot not in succ:
        return Trajectory((depot,))
    order, v = [depot], succ[depot]
    while v != depot:
        order.append(v)
        v = succ[v]
    return Trajectory((*order, depot))


def lazy_sec_loop(
    inst: Instance,
    tm: TimeMatrix | None = None,
    time_limit: float | None = None,
    incumbent: Trajectory | None = None,
    rule: str = "dantzig",
    separate: bool = True,
    max_rounds: int | None = None,
    backend: str = "builtin",
) -> tuple[Trajectory, SolveReport]:
    """Solve without subtour cuts, cut every depot-free cycle found, repeat.

    Each round is solved to optimality by ``backend``: ``"builtin"`` (own
    simplex and branch-and-bound) or ``"highs"`` (scipy's MILP solver).
    ``incumbent`` is any feasible tour used for pruning (greedy by default).
    ``separate=False`` skips the cut step entirely and exists for fault
    injection in verification runs.
    """
    if backend not in BACKENDS:
        raise InvalidInputError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    tm = tm if tm is not None else inst.time_matrix()
    start = time.monotonic()
    deadline = start + time_limit if time_limit is not None else None
    model = build_model(inst, tm)
    report = SolveReport(method="exact")
    if max_rounds is None:
        max_rounds = 10 * 2 ** min(inst.n, 20)

    best_tour = incumbent if incumbent is not None else greedy_build(inst, tm)[0]
    best_tour = Trajectory.build(best_tour.order, inst, tm)
    flow = None
    while True:
        if report.cut_rounds >= max_rounds:
            raise CutLimitError(
                f"no subtour-free solution after {report.cut_rounds} rounds "
                f"({report.cuts_added} cuts, {report.nodes_explored} nodes)"
            )
        start_flow = trajectory_to_flow(best_tour, inst.n)
        if backend == "highs":
            res = highs_round(model, start_flow, deadline)
        else:
            res = branch_and_bound(model, start_flow, deadline, rule)
        report.nodes_explored += res.nodes_explored
        if res.status == "time_limit":
            report.status = "time_limit"
            break
        report.cut_rounds += 1
        flow = res.flow
        report.bound_history.append(res.objective)
        subtours = find_subtours(flow, inst.depot)
        cuts = subtours if separate else []
        added = sum(model.add_cut(c) for c in cuts)
        report.cuts_added += added
        report.rounds.append(
            {
                "round": report.cut_rounds,
                "relaxed_objective": res.objective,
                "cuts_added": added,
                "subtours": [list(c.node_set) for c in subtours],
                "nodes_explored": res.nodes_explored,
                "elapsed_s": time.monotonic() - start,
            }
        )
        log.debug("round %d: bound %.6g, %d cuts", report.cut_rounds, res.objective, added)
        candidate = Trajectory.build(_depot_tour(flow, inst.depot).order, inst, tm)
        if candidate.total_score > best_tour.total_score:
            best_tour = candidate
        if not cuts:
            break
        if added == 0:
            raise CutLimitError("separation returned only cuts that are already in the model")

    if report.status == "optimal" and separate:
        best_tour = Trajectory.build(flow_to_trajectory(flow, inst.depot).order, inst, tm)
    report.best_objective = best_tour.total_score
    if not separate and flow is not None:
        report.status = "unverified"
        report.best_objective = flow.objective(inst.scores)
    report.wall_time_s = time.monotonic() - start
    return best_tour, report
