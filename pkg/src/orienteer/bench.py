"""Seeded random topologies, budget sweeps and CSV reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import InvalidInputError
from .model import Instance, TimeMatrix, check_feasible, tour_score, tour_time

log = logging.getLogger(__name__)

METHODS = ("greedy", "exact", "oracle")
AGGREGATE_HEADER = (
    "dmax_min",
    "method",
    "mean_score",
    "mean_wall_time_s",
    "mean_visited_nodes",
    "mean_journey_min",
    "timeouts",
    "runs",
)
WALL_TIME_COLUMNS = ("wall_time_s", "mean_wall_time_s")


@dataclass
class ExperimentConfig:
    topologies: int = 100
    nodes: int = 60
    coord_sigma_km: float = 0.5
    score_mean: float = 5.0
    score_sigma: float = 5.0 / 3.0
    velocity_kmh: float = 70.0
    dmax_sweep_min: list[float] = field(default_factory=lambda: [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0])
    methods: list[str] = field(default_factory=lambda: ["greedy", "exact"])
    master_seed: int = 0
    time_limit_s: float | None = 7200.0
    utility: str = "added"
    metric: str = "euclidean"
    backend: str = "highs"

    def __post_init__(self):
        self.dmax_sweep_min = [float(d) for d in self.dmax_sweep_min]
        self.methods = list(self.methods)
        if self.topologies < 1 or self.nodes < 1:
            raise InvalidInputError("topologies and nodes must be positive")
        if min(self.coord_sigma_km, self.score_sigma) <= 0:
            raise InvalidInputError("sigma values must be positive")
        if not self.dmax_sweep_min or min(self.dmax_sweep_min) <= 0:
            raise InvalidInputError("budget sweep must hold positive values")
        if any(b <= a for a, b in zip(self.dmax_sweep_min, self.dmax_sweep_min[1:])):
            raise InvalidInputError("budget sweep must be strictly ascending")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise InvalidInputError(f"methods must be a nonempty subset of {METHODS}")
        if self.time_limit_s is not None and self.time_limit_s <= 0:
            raise InvalidInputError("time limit must be positive")
        if self.utility not in ("added", "total"):
            raise InvalidInputError(f"unknown utility mode {self.utility!r}")
        if self.metric not in ("euclidean", "squared"):
            raise InvalidInputError(f"unknown metric {self.metric!r}")
        if self.backend not in ("builtin", "highs"):
            raise InvalidInputError(f"unknown exact backend {self.backend!r}")

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise InvalidInputError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)

    def topology_seed(self, index: int) -> int:
        return self.master_seed * 1_000_003 + index


PROFILES = {
    # 60-node topologies, 70 km/h, 2..16 min budgets
    "fig2": dict(nodes=60, topologies=100, velocity_kmh=70.0),
    # same with 80 nodes, for execution-time tables
    "table1": dict(nodes=80, topologies=100, velocity_kmh=70.0),
    # 50-node topologies described alongside the setup
    "setup50": dict(nodes=50, topologies=100, velocity_kmh=70.0),
}


def _truncated_normal(rng, mean, sigma, low, high, size):
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(mean, sigma, size - filled)
        keep = draw[(draw >= low) & (draw <= high)]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def generate_instance(n: int, seed: int, cfg: ExperimentConfig | None = None, budget_min: float = 0.0) -> Instance:
    """Depot at the origin with score 0, n - 1 nodes with clipped-normal coordinates and scores.

    Draws come from numpy's PCG64 seeded with ``seed``; out-of-range samples
    are redrawn.
    """
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    cfg = cfg or ExperimentConfig()
    rng = np.random.default_rng(seed)
    m = n - 1
    xs = _truncated_normal(rng, 0.0, cfg.coord_sigma_km, -1.0, 1.0, m)
    ys = _truncated_normal(rng, 0.0, cfg.coord_sigma_km, -1.0, 1.0, m)
    scores = _truncated_normal(rng, cfg.score_mean, cfg.score_sigma, 0.0, 10.0, m)
    coords = [(0.0, 0.0)] + list(zip(xs.tolist(), ys.tolist()))
    return Instance(tuple(coords), (0.0, *scores.tolist()), 0, cfg.velocity_kmh, budget_min)


@dataclass
class RunRecord:
    topology_seed: int
    dmax_min: float
    method: str
    score: float
    wall_time_s: float
    visited_nodes: int
    journey_min: float
    cut_rounds: int | None = None
    hit_time_limit: bool = False
    error: str = ""


@dataclass
class AggregateRow:
    dmax_min: float
    method: str
    mean_score: float
    mean_wall_time_s: float
    mean_visited_nodes: float
    mean_journey_min: float
    timeouts: int
    runs: int
    std_score: float = 0.0
    std_wall_time_s: float = 0.0
    std_visited_nodes: float = 0.0
    std_journey_min: float = 0.0


def solve(
    inst: Instance,
    method: str,
    tm: TimeMatrix | None = None,
    time_limit: float | None = None,
    utility: str = "added",
    backend: str = "highs",
):
    """Dispatch to one solver; returns ``(trajectory, report)``."""
    from .exact import lazy_sec_loop
    from .greedy import greedy_build
    from .oracle import dp_optimal
    from .report import SolveReport

    tm = tm if tm is not None else inst.time_matrix()
    if method == "greedy":
        return greedy_build(inst, tm, utility=utility)
    if method == "exact":
        return lazy_sec_loop(inst, tm, time_limit=time_limit, backend=backend)
    if method == "oracle":
        start = time.perf_counter()
        traj, obj = dp_optimal(inst, tm)
        return traj, SolveReport("oracle", best_objective=obj, wall_time_s=time.perf_counter() - start)
    raise InvalidInputError(f"unknown method {method!r}")


def _run_one(args) -> RunRecord:
    cfg, index, dmax, method = args
    seed = cfg.topology_seed(index)
    inst = generate_instance(cfg.nodes, seed, cfg, budget_min=dmax)
    tm = inst.time_matrix(cfg.metric)
    try:
        start = time.monotonic()
        traj, report = solve(inst, method, tm, cfg.time_limit_s, cfg.utility, cfg.backend)
        wall = time.monotonic() - start
    except Exception as exc:  # a failed run must not abort the sweep
        log.warning("run failed: seed=%d dmax=%g method=%s: %s", seed, dmax, method, exc)
        return RunRecord(seed, dmax, method, math.nan, math.nan, 0, math.nan, error=f"{type(exc).__name__}: {exc}")
    ok = check_feasible(traj, inst, tm)
    if not ok or abs(tour_score(traj, inst) - traj.total_score) > 1e-9:
        raise AssertionError(f"infeasible trajectory from {method} (seed {seed}, dmax {dmax}): {ok.reason}")
    return RunRecord(
        topology_seed=seed,
        dmax_min=dmax,
        method=method,
        score=traj.total_score,
        wall_time_s=wall,
        visited_nodes=len(traj.visited),
        journey_min=tour_time(traj, tm),
        cut_rounds=report.cut_rounds if method == "exact" else None,
        hit_time_limit=report.status == "time_limit",
    )


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> tuple[list[RunRecord], list[AggregateRow]]:
    jobs = [
        (cfg, t, dmax, method)
        for t in range(cfg.topologies)
        for dmax in cfg.dmax_sweep_min
        for method in cfg.methods
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_run_one(job) for job in jobs]
    records.sort(key=lambda r: (r.topology_seed, r.dmax_min, METHODS.index(r.method)))
    _log_budget_monotonicity(records)
    return records, aggregate(records, cfg)


def _log_budget_monotonicity(records):
    by_key = {}
    for r in records:
        by_key.setdefault((r.topology_seed, r.method), []).append(r)
    for (seed, method), rows in by_key.items():
        rows.sort(key=lambda r: r.dmax_min)
        for a, b in zip(rows, rows[1:]):
            if b.score < a.score - 1e-9:
                log.info(
                    "score drops with budget: seed=%d method=%s %g@%g -> %g@%g",
                    seed, method, a.score, a.dmax_min, b.score, b.dmax_min,
                )


def _mean_std(values):
    if not values:
        return math.nan, math.nan
    return statistics.fmean(values), (statistics.stdev(values) if len(values) > 1 else 0.0)


def aggregate(records: list[RunRecord], cfg: ExperimentConfig) -> list[AggregateRow]:
    """Mean and sample std per (budget, method); timed-out and failed runs are left out of the means."""
    rows = []
    for dmax in cfg.dmax_sweep_min:
        for method in (m for m in METHODS if m in cfg.methods):
            group = [r for r in records if r.dmax_min == dmax and r.method == method]
            good = [r for r in group if not r.hit_time_limit and not r.error]
            ms, ss = _mean_std([r.score for r in good])
            mw, sw = _mean_std([r.wall_time_s for r in good])
            mv, sv = _mean_std([r.visited_nodes for r in good])
            mj, sj = _mean_std([r.journey_min for r in good])
            rows.append(
                AggregateRow(
                    dmax, method, ms, mw, mv, mj,
                    timeouts=sum(r.hit_time_limit for r in group),
                    runs=len(group),
                    std_score=ss, std_wall_time_s=sw, std_visited_nodes=sv, std_journey_min=sj,
                )
            )
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(RunRecord)]
    writer.writerow(names)
    for r in records:
        writer.writerow([_fmt(getattr(r, name)) for name in names])
    return buf.getvalue()


def aggregate_csv(rows: list[AggregateRow], with_std: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(AGGREGATE_HEADER)
    if with_std:
        names += ["std_score", "std_wall_time_s", "std_visited_nodes", "std_journey_min"]
    writer.writerow(names)
    for row in rows:
        d = asdict(row)
        writer.writerow([_fmt(d[name]) for name in names])
    return buf.getvalue()


def csv_digest(text: str, exclude=WALL_TIME_COLUMNS) -> str:
    """SHA-256 of a CSV with the timing columns dropped."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return hashlib.sha256(b"").hexdigest()
    keep = [i for i, name in enumerate(rows[0]) if name not in exclude]
    h = hashlib.sha256()
    for row in rows:
        h.update((",".join(row[i] for i in keep) + "\n").encode())
    return h.hexdigest()


def half_reach_budget(inst: Instance, tm: TimeMatrix | None = None) -> float:
    """Median out-and-back time from the depot: about half the nodes can be reached at all."""
    tm = tm if tm is not None else inst.time_matrix()
    trips = [2.0 * tm.t[inst.depot, v] for v in inst.nodes if v != inst.depot]
    return float(np.median(trips)) if trips else 0.0
