"""Exact reference solvers for small instances.

``dp_optimal`` is a Held-Karp style subset DP; ``permutation_bruteforce``
enumerates every subset and ordering. Neither shares code with the ILP path
so they can certify it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import CapacityError
from .model import TIME_TOL, Instance, TimeMatrix, Trajectory

DP_NODE_CAP = 20
BRUTE_HARD_CAP = 9


def _pick(candidates):
    """candidates: iterable of (score, time, node_tuple); best score, then time, then lex node set."""
    return min(candidates, key=lambda c: (-c[0], c[1], c[2]))


def _exact_score(inst, nodes):
    return math.fsum(inst.scores[v] for v in sorted(set(nodes) | {inst.depot})) if nodes else 0.0


def best_time_table(tm: TimeMatrix, depot: int, others):
    """best[mask, j]: shortest depot-rooted path covering exactly ``mask`` and ending at others[j].

    Returns ``(best, parent)``; parent holds the index of the previous node or -1.
    """
    m = len(others)
    size = 1 << m
    best = np.full((size, m), np.inf)
    parent = np.full((size, m), -1, dtype=np.int8)
    if m == 0:
        return best, parent
    idx = np.asarray(others)
    sub = tm.t[np.ix_(idx, idx)]
    for j in range(m):
        best[1 << j, j] = tm.t[depot, idx[j]]
    masks = np.arange(size)
    popcount = np.zeros(size, dtype=np.int64)
    for j in range(m):
        popcount += (masks >> j) & 1
    for k in range(2, m + 1):
        layer = masks[popcount == k]
        for j in range(m):
            sel = layer[(layer >> j) & 1 == 1]
            prev = sel ^ (1 << j)
            cand = best[prev] + sub[:, j]
            arg = np.argmin(cand, axis=1)
            best[sel, j] = cand[np.arange(sel.size), arg]
            parent[sel, j] = arg
    return best, parent


def dp_optimal(
    inst: Instance, tm: TimeMatrix | None = None, node_cap: int = DP_NODE_CAP
) -> tuple[Trajectory, float]:
    if inst.n > node_cap:
        raise CapacityError(f"dp_optimal handles at most {node_cap} nodes, got {inst.n}")
    tm = tm if tm is not None else inst.time_matrix()
    s = inst.depot
    others = [v for v in inst.nodes if v != s]
    m = len(others)
    if m == 0:
        return Trajectory.build((s,), inst, tm), 0.0
    best, parent = best_time_table(tm, s, others)
    idx = np.asarray(others)
    closing = best + tm.t[idx, s][None, :]
    close_end = np.argmin(closing, axis=1)
    close_time = closing[np.arange(closing.shape[0]), close_end]
    close_time[0] = 0.0
    feasible = close_time <= inst.budget_min + TIME_TOL

    masks = np.arange(1 << m)
    scores = np.asarray([inst.scores[v] for v in others])
    approx = np.zeros(masks.size)
    for j in range(m):
        approx += ((masks >> j) & 1) * scores[j]
    approx[0] = 0.0  # depot-only tour has no flow edge
    approx[masks > 0] += inst.scores[s]
    approx = np.where(feasible, approx, -np.inf)
    top = np.flatnonzero(approx >= approx.max() - 1e-9 * (1.0 + abs(approx.max())))

    def members(mask):
        return tuple(others[j] for j in range(m) if mask >> j & 1)

    pick = _pick(
        (_exact_score(inst, members(mk)), float(close_time[mk]), members(mk), int(mk)) for mk in top
    )
    mask = pick[3]
    if mask == 0:
        traj = Trajectory.build((s,), inst, tm)
        return traj, traj.total_score
    # walk parent pointers backwards from the best closing node
    path, j = [], int(close_end[mask])
    while mask:
        path.append(others[j])
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    traj = Trajectory.build((s, *reversed(path), s), inst, tm)
    return traj, traj.total_score


def permutation_bruteforce(
    inst: Instance, tm: TimeMatrix | None = None, hard_cap: int = BRUTE_HARD_CAP
) -> tuple[Trajectory, float]:
    if inst.n > hard_cap:
        raise CapacityError(f"permutation_bruteforce handles at most {hard_cap} nodes, got {inst.n}")
    tm = tm if tm is not None else inst.time_matrix()
    s = inst.depot
    others = [v for v in inst.nodes if v != s]
    candidates = [(0.0, 0.0, (), (s,))]
    for k in range(1, len(others) + 1):
        for subset in itertools.combinations(others, k):
            perms = np.array(list(itertools.permutations(subset)))
            legs = tm.t[s, perms[:, 0]] + tm.t[perms[:, -1], s]
            for a in range(k - 1):
                legs = legs + tm.t[perms[:, a], perms[:, a + 1]]
            r = int(np.argmin(legs))
            if legs[r] <= inst.budget_min + TIME_TOL:
                order = (s, *perms[r].tolist(), s)
                candidates.append((_exact_score(inst, subset), float(legs[r]), subset, order))
    pick = _pick(candidates)
    traj = Trajectory.build(pick[3], inst, tm)
    return traj, traj.total_score
