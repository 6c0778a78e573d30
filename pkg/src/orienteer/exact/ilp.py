"""0-1 flow formulation of the budgeted depot tour and its subtour cuts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from ..model import TIME_TOL, FlowAssignment, Instance, TimeMatrix


@dataclass(frozen=True)
class SecCut:
    """``sum f_ij over i, j in S  <=  |S| - 1`` for a depot-free node set S."""

    node_set: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "node_set", tuple(sorted(set(self.node_set))))
        if len(self.node_set) < 2:
            raise InvalidInputError("a subtour cut needs at least two nodes")

    @property
    def rhs(self) -> int:
        return len(self.node_set) - 1

    def lhs(self, flow: FlowAssignment) -> int:
        idx = np.asarray(self.node_set)
        return int(flow.f[np.ix_(idx, idx)].sum())


@dataclass
class IlpModel:
    """Directed arc variables ``f_ij`` (i != j) in row-major order.

    Rows: in-degree == out-degree per node; out-degree <= 1 and in-degree <= 1
    per node; depot out-degree <= 1; total flight time <= budget; then one row
    per accumulated subtour cut.
    """

    n: int
    depot: int
    arcs: np.ndarray  # (nv, 2)
    arc_index: np.ndarray  # (n, n), -1 on the diagonal
    c: np.ndarray
    times: np.ndarray
    budget: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_deg: np.ndarray
    b_deg: np.ndarray
    upper: np.ndarray  # 0 for arcs that cannot lie on any tour within budget
    cuts: list[SecCut] = field(default_factory=list)
    _cut_rows: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def num_vars(self) -> int:
        return self.arcs.shape[0]

    @property
    def A_ub(self) -> np.ndarray:
        rows = [self.A_deg, self.times[None, :]]
        if self._cut_rows:
            rows.append(np.vstack(self._cut_rows))
        return np.vstack(rows)

    @property
    def b_ub(self) -> np.ndarray:
        return np.concatenate([self.b_deg, [self.budget], [c.rhs for c in self.cuts]])

    def add_cut(self, cut: SecCut) -> bool:
        """Append a cut; returns False if the same node set is already present."""
        if self.depot in cut.node_set:
            raise InvalidInputError("subtour cuts must exclude the depot")
        if cut in self.cuts:
            return False
        idx = np.asarray(cut.node_set)
        row = np.zeros(self.num_vars)
        sub = self.arc_index[np.ix_(idx, idx)]
        row[sub[sub >= 0]] = 1.0
        self.cuts.append(cut)
        self._cut_rows.append(row)
        return True

    def flow_from_vector(self, x) -> FlowAssignment:
        f = np.zeros((self.n, self.n), dtype=np.int8)
        on = np.flatnonzero(np.asarray(x) > 0.5)
        f[self.arcs[on, 0], self.arcs[on, 1]] = 1
        return FlowAssignment(f)

    def vector_from_flow(self, flow: FlowAssignment) -> np.ndarray:
        x = np.zeros(self.num_vars)
        for i, j in flow.arcs():
            x[self.arc_index[i, j]] = 1.0
        return x

    def is_feasible_point(self, x) -> bool:
        """Exact integer check of a 0/1 vector against every row."""
        x = np.asarray(x, dtype=float)
        if np.any(x > self.upper):
            return False
        if np.any(self.A_eq @ x != self.b_eq):
            return False
        if np.any(self.A_deg @ x > self.b_deg):
            return False
        if self.times[x > 0.5].sum() > self.budget + TIME_TOL:
            return False
        return all(c.lhs(self.flow_from_vector(x)) <= c.rhs for c in self.cuts)

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))


def build_model(inst: Instance, tm: TimeMatrix | None = None, prune: bool = True) -> IlpModel:
    """Integer program for ``inst``; no subtour cuts yet.

    With ``prune`` an arc (i, j) gets upper bound 0 when even the triangle
    depot -> i -> j -> depot exceeds the budget.
    """
    tm = tm if tm is not None else inst.time_matrix()
    n, s = inst.n, inst.depot
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    arcs = np.stack([ii, jj], axis=1)
    nv = arcs.shape[0]
    arc_index = -np.ones((n, n), dtype=np.int64)
    arc_index[ii, jj] = np.arange(nv)
    var = np.arange(nv)
    scores = np.asarray(inst.scores)
    t = tm.t

    out_rows = np.zeros((n, nv))
    out_rows[ii, var] = 1.0
    in_rows = np.zeros((n, nv))
    in_rows[jj, var] = 1.0
    depot_row = out_rows[s : s + 1]
    A_deg = np.vstack([out_rows, in_rows, depot_row])
    b_deg = np.ones(2 * n + 1)

    upper = np.ones(nv)
    if prune:
        loop = t[s, ii] + t[ii, jj] + t[jj, s]
        upper[loop > inst.budget_min + TIME_TOL] = 0.0
    return IlpModel(
        n=n,
        depot=s,
        arcs=arcs,
        arc_index=arc_index,
        c=scores[ii].astype(float),
        times=t[ii, jj].astype(float),
        budget=float(inst.budget_min),
        A_eq=out_rows - in_rows,
        b_eq=np.zeros(n),
        A_deg=A_deg,
        b_deg=b_deg,
        upper=upper,
    )


def find_subtours(flow: FlowAssignment, depot: int) -> list[SecCut]:
    """One cut per support component that avoids the depot."""
    return [SecCut(comp) for comp in flow.components() if depot not in comp and len(comp) >= 2]
