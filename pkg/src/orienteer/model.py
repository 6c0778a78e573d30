"""Problem instances, travel-time geometry, tours and their flow encoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistentFlowError, InvalidInputError, SubtourError

TIME_TOL = 1e-9
METRICS = ("euclidean", "squared")


@dataclass(frozen=True)
class Instance:
    """Scored locations, a depot, a UAV speed and a flight-time budget.

    Coordinates are in km, the budget in minutes.
    """

    coords: tuple[tuple[float, float], ...]
    scores: tuple[float, ...]
    depot: int = 0
    velocity_kmh: float = 70.0
    budget_min: float = 0.0

    def __post_init__(self):
        coords = tuple((float(x), float(y)) for x, y in self.coords)
        scores = tuple(float(s) for s in self.scores)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "scores", scores)
        n = len(coords)
        if n < 1:
            raise InvalidInputError("instance needs at least one node")
        if len(scores) != n:
            raise InvalidInputError(f"{n} coordinates but {len(scores)} scores")
        if not 0 <= self.depot < n:
            raise InvalidInputError(f"depot {self.depot} out of range for {n} nodes")
        if not (self.velocity_kmh > 0 and math.isfinite(self.velocity_kmh)):
            raise InvalidInputError(f"velocity must be positive, got {self.velocity_kmh}")
        if not self.budget_min >= 0:
            raise InvalidInputError(f"budget must be nonnegative, got {self.budget_min}")
        if not all(math.isfinite(c) for xy in coords for c in xy):
            raise InvalidInputError("coordinates must be finite")
        if not all(s >= 0 and math.isfinite(s) for s in scores):
            raise InvalidInputError("scores must be finite and nonnegative")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def nodes(self) -> range:
        return range(self.n)

    def with_budget(self, budget_min: float) -> Instance:
        return Instance(self.coords, self.scores, self.depot, self.velocity_kmh, budget_min)

    def time_matrix(self, metric: str = "euclidean") -> TimeMatrix:
        return travel_time_matrix(self.coords, self.velocity_kmh, metric)

    def to_dict(self) -> dict:
        return {
            "velocity_kmh": self.velocity_kmh,
            "budget_min": self.budget_min,
            "depot": self.depot,
            "nodes": [
                {"id": i, "x_km": x, "y_km": y, "score": s}
                for i, ((x, y), s) in enumerate(zip(self.coords, self.scores))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Instance:
        try:
            nodes = sorted(data["nodes"], key=lambda nd: nd["id"])
            ids = [int(nd["id"]) for nd in nodes]
            if ids != list(range(len(nodes))):
                raise InvalidInputError("node ids must be dense integers 0..n-1")
            return cls(
                coords=tuple((nd["x_km"], nd["y_km"]) for nd in nodes),
                scores=tuple(nd["score"] for nd in nodes),
                depot=int(data.get("depot", 0)),
                velocity_kmh=float(data["velocity_kmh"]),
                budget_min=float(data["budget_min"]),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed instance: {exc!r}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> Instance:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"instance is not valid JSON: {exc}") from exc


@dataclass(frozen=True, eq=False)
class TimeMatrix:
    """Symmetric pairwise travel times in minutes."""

    t: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InvalidInputError(f"time matrix must be square, got shape {t.shape}")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise InvalidInputError("travel times must be finite and nonnegative")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def __getitem__(self, ij):
        return self.t[ij]


def travel_time_matrix(coords, velocity_kmh: float, metric: str = "euclidean") -> TimeMatrix:
    """Pairwise flight times in minutes.

    ``euclidean`` divides straight-line distance by the speed; ``squared``
    uses the squared distance instead (km^2 treated as km).
    """
    if metric not in METRICS:
        raise InvalidInputError(f"unknown metric {metric!r}, expected one of {METRICS}")
    if not (velocity_kmh > 0 and math.isfinite(velocity_kmh)):
        raise InvalidInputError(f"velocity must be positive, got {velocity_kmh}")
    xy = np.asarray(coords, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(xy)):
        raise InvalidInputError("coordinates must be finite")
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if metric == "squared":
        dist = dist**2
    t = dist / velocity_kmh * 60.0
    t = np.maximum(t, t.T)  # exact symmetry
    np.fill_diagonal(t, 0.0)
    return TimeMatrix(t)


@dataclass(frozen=True)
class Trajectory:
    """Depot-rooted closed tour; a depot-only tour is stored as ``(s,)``."""

    order: tuple[int, ...]
    total_time_min: float = 0.0
    total_score: float = 0.0

    @classmethod
    def build(cls, order: Sequence[int], inst: Instance, tm: TimeMatrix | None = None) -> Trajectory:
        order = _normalize_order(order)
        bare = cls(order)
        tm = tm if tm is not None else inst.time_matrix()
        return cls(order, tour_time(bare, tm), tour_score(bare, inst))

    @property
    def depot(self) -> int:
        return self.order[0]

    @property
    def visited(self) -> tuple[int, ...]:
        """Distinct non-depot nodes in visiting order."""
        return self.order[1:-1]

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.order[:-1], self.order[1:]))

    def to_dict(self) -> dict:
        return {"order": list(self.order), "time_min": self.total_time_min, "score": self.total_score}


def _normalize_order(order: Iterable[int]) -> tuple[int, ...]:
    order = tuple(int(v) for v in order)
    if not order:
        raise InvalidInputError("empty tour")
    if len(order) == 2 and order[0] == order[1]:
        return order[:1]
    return order


def _check_ids(order, n):
    for v in order:
        if not 0 <= v < n:
            raise InvalidInputError(f"node id {v} out of range for {n} nodes")


def tour_time(traj: Trajectory, tm: TimeMatrix) -> float:
    order = _normalize_order(traj.order)
    _check_ids(order, tm.n)
    if len(order) < 2:
        return 0.0
    idx = np.asarray(order)
    return math.fsum(tm.t[idx[:-1], idx[1:]].tolist())


def tour_score(traj: Trajectory, inst: Instance) -> float:
    """Score of every distinct node with an outgoing hop; a depot-only tour scores 0."""
    order = _normalize_order(traj.order)
    _check_ids(order, inst.n)
    if len(order) < 2:
        return 0.0
    return math.fsum(inst.scores[v] for v in sorted(set(order[:-1])))


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    reason: str = "ok"

    def __bool__(self):
        return self.ok


def check_feasible(traj: Trajectory, inst: Instance, tm: TimeMatrix | None = None) -> Feasibility:
    order = tuple(traj.order)
    if not order:
        return Feasibility(False, "empty")
    if any(not 0 <= v < inst.n for v in order):
        return Feasibility(False, "id_out_of_range")
    if order[0] != inst.depot or order[-1] != inst.depot:
        return Feasibility(False, "not_depot_rooted")
    inner = order[1:-1]
    if inst.depot in inner or len(set(inner)) != len(inner):
        return Feasibility(False, "repeated_node")
    tm = tm if tm is not None else inst.time_matrix()
    if tour_time(traj, tm) > inst.budget_min + TIME_TOL:
        return Feasibility(False, "over_budget")
    return Feasibility(True)


@dataclass(frozen=True, eq=False)
class FlowAssignment:
    """Binary directed edge selection; ``f[i, j] == 1`` means the tour flies i -> j."""

    f: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.array(self.f, dtype=np.int8)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise InvalidInputError(f"flow must be square, got shape {f.shape}")
        if np.any((f != 0) & (f != 1)):
            raise InvalidInputError("flow entries must be 0 or 1")
        if np.any(np.diag(f)):
            raise InvalidInputError("self-loops are not allowed")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @classmethod
    def zeros(cls, n: int) -> FlowAssignment:
        return cls(np.zeros((n, n), dtype=np.int8))

    @property
    def n(self) -> int:
        return self.f.shape[0]

    def __eq__(self, other):
        return isinstance(other, FlowAssignment) and np.array_equal(self.f, other.f)

    def arcs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.f))]

    def is_balanced(self) -> bool:
        out_deg, in_deg = self.f.sum(axis=1), self.f.sum(axis=0)
        return bool(np.array_equal(out_deg, in_deg) and out_deg.max(initial=0) <= 1)

    def objective(self, scores) -> float:
        """Sum of the score of i over every active arc leaving i."""
        out_deg = self.f.sum(axis=1)
        return math.fsum(scores[i] for i in range(self.n) if out_deg[i])

    def travel_time(self, tm: TimeMatrix) -> float:
        return math.fsum(tm.t[i, j] for i, j in self.arcs())

    def components(self) -> list[tuple[int, ...]]:
        """Node sets of the cycles in the support graph (isolated nodes skipped)."""
        succ = {i: j for i, j in self.arcs()}
        seen, comps = set(), []
        for start in sorted(succ):
            if start in seen:
                continue
            comp, v = [], start
            while v not in seen:
                seen.add(v)
                comp.append(v)
                v = succ.get(v, start)
            comps.append(tuple(sorted(comp)))
        return comps


def flow_to_trajectory(flow: FlowAssignment, depot: int) -> Trajectory:
    """Walk successors from the depot; times and scores are left at zero."""
    if not flow.is_balanced():
        raise InconsistentFlowError("flow violates degree balance or the unit degree cap")
    n = flow.n
    if not 0 <= depot < n:
        raise InvalidInputError(f"depot {depot} out of range for {n} nodes")
    succ = {i: j for i, j in flow.arcs()}
    if depot not in succ:
        if succ:
            raise InconsistentFlowError(f"depot {depot} isolated but {len(succ)} arcs active")
        return Trajectory((depot,))
    order, v = [depot], succ[depot]
    while v != depot:
        order.append(v)
        v = succ[v]
    order.append(depot)
    on_tour = set(order)
    stray = [i for i in succ if i not in on_tour]
    if stray:
        comp = next(c for c in flow.components() if stray[0] in c)
        raise SubtourError(comp)
    return Trajectory(tuple(order))


def trajectory_to_flow(traj: Trajectory, n: int) -> FlowAssignment:
    order = _normalize_order(traj.order)
    _check_ids(order, n)
    inner = order[1:-1]
    if len(order) > 1 and (order[0] != order[-1] or order[0] in inner or len(set(inner)) != len(inner)):
        raise InvalidInputError(f"not a simple depot-rooted tour: {order}")
    f = np.zeros((n, n), dtype=np.int8)
    for i, j in zip(order[:-1], order[1:]):
        f[i, j] = 1
    return FlowAssignment(f)
