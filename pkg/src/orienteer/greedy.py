"""Cheapest-ratio insertion heuristic.

Starting from the empty tour at the depot, repeatedly splice in the unvisited
node with the best score per added flight time until nothing else fits.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .model import Instance, TimeMatrix, Trajectory, tour_time
from .report import SolveReport

log = logging.getLogger(__name__)

UTILITY_MODES = ("added", "total")
ZERO_EXTRA = 1e-12


@dataclass(frozen=True)
class CandidateInsertion:
    node: int
    segment: int
    extra_time_min: float
    utility: float


def _segments(order):
    if len(order) == 1:
        return [(order[0], order[0])]
    return list(zip(order[:-1], order[1:]))


def insertion_extra_time(tour: Trajectory, m: int, i: int, tm: TimeMatrix) -> float:
    """Detour cost of flying order[m] -> i -> order[m+1] instead of order[m] -> order[m+1]."""
    segs = _segments(tour.order)
    if not 0 <= m < len(segs):
        raise InvalidInputError(f"segment {m} out of range for a tour with {len(segs)} segments")
    if not 0 <= i < tm.n:
        raise InvalidInputError(f"node id {i} out of range")
    if i in tour.order:
        raise InvalidInputError(f"node {i} is already on the tour")
    a, b = segs[m]
    return tm.t[a, i] + tm.t[i, b] - tm.t[a, b]


def best_candidate(
    tour: Trajectory,
    inst: Instance,
    tm: TimeMatrix,
    t_d: float,
    utility: str = "added",
) -> CandidateInsertion | None:
    """Best feasible insertion over all segments and unvisited nodes, or None.

    Ranking: highest utility, then lowest extra time, lowest node id, lowest
    segment index. A (near-)free insertion of a scored node has infinite
    utility.
    """
    if utility not in UTILITY_MODES:
        raise InvalidInputError(f"unknown utility mode {utility!r}")
    on_tour = np.zeros(inst.n, dtype=bool)
    on_tour[list(tour.order)] = True
    cand = np.flatnonzero(~on_tour)
    if cand.size == 0:
        return None
    segs = np.array(_segments(tour.order))
    a, b = segs[:, 0], segs[:, 1]
    t = tm.t
    # rows: segments, cols: candidate nodes
    extra = t[a][:, cand] + t[cand][:, b].T - t[a, b][:, None]
    feasible = t_d + extra <= inst.budget_min
    scores = np.asarray(inst.scores)[cand][None, :]
    denom = extra if utility == "added" else t_d + extra
    free = denom <= ZERO_EXTRA
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(free, np.where(scores > 0, np.inf, 0.0), scores / np.where(free, 1.0, denom))
    ok = feasible & (u > 0)
    if not ok.any():
        return None
    seg_idx, col_idx = np.nonzero(ok)
    u_ok = u[seg_idx, col_idx]
    extra_key = np.where(np.isinf(u_ok), 0.0, extra[seg_idx, col_idx])
    best = np.lexsort((seg_idx, cand[col_idx], extra_key, -u_ok))[0]
    m, k = int(seg_idx[best]), int(col_idx[best])
    return CandidateInsertion(
        node=int(cand[k]), segment=m, extra_time_min=float(extra[m, k]), utility=float(u[m, k])
    )


def _splice(order, m, node):
    if len(order) == 1:
        return (order[0], node, order[0])
    return order[: m + 1] + (node,) + order[m + 1 :]


def greedy_build(
    inst: Instance, tm: TimeMatrix | None = None, utility: str = "added"
) -> tuple[Trajectory, SolveReport]:
    tm = tm if tm is not None else inst.time_matrix()
    start = time.perf_counter()
    order = (inst.depot,)
    t_d = 0.0
    iterations = 0
    while True:
        cand = best_candidate(Trajectory(order), inst, tm, t_d, utility)
        if cand is None:
            break
        order = _splice(order, cand.segment, cand.node)
        # recompute rather than accumulate so the budget check never drifts
        t_d = tour_time(Trajectory(order), tm)
        iterations += 1
    traj = Trajectory.build(order, inst, tm)
    elapsed = time.perf_counter() - start
    report = SolveReport(
        method="greedy",
        best_objective=traj.total_score,
        status="heuristic",
        iterations=iterations,
        wall_time_s=elapsed,
    )
    log.debug("greedy: %d insertions, score %.6g, time %.6g min", iterations, traj.total_score, t_d)
    return traj, report

