"""Per-round 0-1 solves delegated to HiGHS (through scipy)."""

from __future__ import annotations

import time

import numpy as np

from ..model import FlowAssignment
from .ilp import IlpModel

PRUNE_TOL = 1e-9
RETRIES = 4


class _Program:
    """A 0-1 program plus a map from its solutions back to arc vectors of ``model``."""

    def __init__(self, model: IlpModel):
        from scipy.optimize import LinearConstraint

        self.model = model
        n, s = model.n, model.depot
        iu, ju = np.triu_indices(n, 1)
        fwd, bwd = model.arc_index[iu, ju], model.arc_index[ju, iu]
        self.undirected = bool(
            np.array_equal(model.times[fwd], model.times[bwd]) and np.array_equal(model.upper[fwd], model.upper[bwd])
        )
        if not self.undirected:
            self.c = -model.c
            self.upper = model.upper
            self.eq = LinearConstraint(model.A_eq, model.b_eq, model.b_eq)
            self.A_ub = model.A_ub
            self.b_ub = model.b_ub.copy()
            self.budget_row = model.A_deg.shape[0]
            return
        # one variable per edge {i, j} plus a visit flag per node; an edge at the
        # depot may be used twice (out and back), any other edge at most once,
        # so every support component is a cycle and each tour is counted once
        ne = iu.size
        self.iu, self.ju, self.ne = iu, ju, ne
        nv = ne + n
        at_depot = (iu == s) | (ju == s)
        self.upper = np.concatenate([model.upper[fwd] * np.where(at_depot, 2.0, 1.0), np.ones(n)])
        scores = model.c[model.arc_index[np.arange(n), (np.arange(n) + 1) % n]]
        self.c = np.concatenate([np.zeros(ne), -scores])
        deg = np.zeros((n, nv))
        deg[iu, np.arange(ne)] = 1.0
        deg[ju, np.arange(ne)] = 1.0
        deg[np.arange(n), ne + np.arange(n)] = -2.0
        self.eq = LinearConstraint(deg, 0.0, 0.0)
        rows = [np.concatenate([model.times[fwd], np.zeros(n)])]
        for cut in model.cuts:
            inside = np.zeros(n, dtype=bool)
            inside[list(cut.node_set)] = True
            rows.append(np.concatenate([(inside[iu] & inside[ju]).astype(float), np.zeros(n)]))
        self.A_ub = np.vstack(rows)
        self.b_ub = np.array([model.budget] + [cut.rhs for cut in model.cuts], dtype=float)
        self.budget_row = 0

    @property
    def num_vars(self) -> int:
        return self.c.size

    def to_arcs(self, x) -> np.ndarray:
        if not self.undirected:
            return x
        n = self.model.n
        used = np.flatnonzero(x[: self.ne] > 0.5)
        f = np.zeros((n, n), dtype=np.int8)
        nbrs = {}
        for k in used:
            i, j = int(self.iu[k]), int(self.ju[k])
            if x[k] > 1.5:
                f[i, j] = f[j, i] = 1
                continue
            nbrs.setdefault(i, []).append(j)
            nbrs.setdefault(j, []).append(i)
        # orient each remaining cycle from its smallest node towards its smaller neighbour
        for v in sorted(nbrs):
            if f[v].any():
                continue
            prev, cur = v, min(nbrs[v])
            f[v, cur] = 1
            while cur != v:
                a, b = nbrs[cur]
                nxt = b if a == prev else a
                f[cur, nxt] = 1
                prev, cur = cur, nxt
        return self.model.vector_from_flow(FlowAssignment(f))


def highs_round(model: IlpModel, incumbent: FlowAssignment | None = None, deadline: float | None = None):
    """Same contract as branch_and_bound, with the 0-1 search done by HiGHS.

    With symmetric travel times the round is solved over undirected edges, which
    drops the mirror image of every cycle and, with it, detached two-node cycles;
    the optimum is still an upper bound for the current model and is returned as
    an arc flow that is checked exactly against it.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    from .solver import BnbResult

    if model.num_vars == 0:
        return BnbResult(FlowAssignment.zeros(model.n), 0.0, "optimal", 0, 0.0)
    best_x, best_obj = None, -np.inf
    if incumbent is not None:
        best_x = model.vector_from_flow(incumbent)
        best_obj = model.objective(best_x)
    prog = _Program(model)
    status = "optimal"
    nodes = 0
    for _ in range(RETRIES):
        options = {"mip_rel_gap": 0.0}
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                status = "time_limit"
                break
            options["time_limit"] = remaining
        res = milp(
            prog.c,
            integrality=np.ones(prog.num_vars),
            bounds=Bounds(np.zeros(prog.num_vars), prog.upper),
            constraints=[prog.eq, LinearConstraint(prog.A_ub, -np.inf, prog.b_ub)],
            options=options,
        )
        nodes += int(getattr(res, "mip_node_count", 0) or 0)
        if res.status == 1:
            status = "time_limit"
        if res.x is None:
            break
        xr = prog.to_arcs(np.round(res.x))
        if model.is_feasible_point(xr):
            obj = model.objective(xr)
            if obj > best_obj + PRUNE_TOL:
                best_x, best_obj = xr, obj
            break
        # solver tolerance let the rounded point overshoot the budget: tighten and retry
        over = float(model.times @ xr - model.budget)
        prog.b_ub[prog.budget_row] -= 2 * max(over, 1e-9)
    if best_x is None:
        return BnbResult(None, -np.inf, "infeasible" if status == "optimal" else status, nodes, -np.inf)
    return BnbResult(model.flow_from_vector(best_x), best_obj, status, nodes, -np.inf)
