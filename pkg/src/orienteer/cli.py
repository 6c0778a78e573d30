"""orienteer: generate instances, solve them, run budget sweeps, cross-check solvers.

Exit codes: 0 success, 1 verification mismatch, 2 I/O error, 3 capacity, 4 bad arguments or input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
import time
from pathlib import Path

from . import bench
from .errors import CapacityError, InvalidInputError
from .model import Instance, tour_time

log = logging.getLogger("orienteer")

EXIT_OK, EXIT_MISMATCH, EXIT_IO, EXIT_CAPACITY, EXIT_USAGE = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return v


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write_text(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="orienteer", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance as JSON", formatter_class=fmt)
    g.add_argument("-n", type=int, default=None, help="number of nodes including the depot (default: profile value, else 60)")
    g.add_argument("--seed", type=int, default=None, help="RNG seed; random when omitted, always printed")
    g.add_argument("-o", "--output", default="-", help="output path, '-' for stdout")
    g.add_argument("--profile", choices=sorted(bench.PROFILES), default=None,
                   help="preset: fig2 = 60 nodes, table1 = 80 nodes, setup50 = 50 nodes; all at 70 km/h")
    g.add_argument("--budget", type=_nonneg_float, default=0.0, help="time budget D_max in minutes stored in the file")
    g.add_argument("--velocity", type=_positive_float, default=70.0, help="UAV speed in km/h")

    s = sub.add_parser("solve", help="solve one instance", formatter_class=fmt)
    s.add_argument("instance", help="instance JSON path")
    s.add_argument("--method", required=True, choices=bench.METHODS,
                   help="greedy insertion, exact lazy-cut ILP, or the Held-Karp oracle (n <= 20)")
    s.add_argument("--dmax", type=_nonneg_float, default=None, help="override the instance budget (minutes)")
    s.add_argument("--utility", choices=("added", "total"), default="added",
                   help="greedy ranking: score / added time, or score / resulting tour time")
    s.add_argument("--metric", choices=("euclidean", "squared"), default="euclidean", help="travel-time metric")
    s.add_argument("--time-limit", type=_positive_float, default=None, help="wall-clock limit for the exact solver (s)")
    s.add_argument("--backend", choices=("highs", "builtin"), default="highs",
                   help="exact subproblem solver: scipy HiGHS or the bundled simplex + branch-and-bound")
    s.add_argument("--log", default=None, help="write the exact solver's per-round log as JSON lines")
    s.add_argument("-o", "--output", default=None, help="also write the result JSON here")

    b = sub.add_parser("benchmark", help="run a budget sweep and write CSV reports", formatter_class=fmt)
    b.add_argument("--config", default=None, help="experiment config JSON; flags below override its fields")
    b.add_argument("--profile", choices=sorted(bench.PROFILES), default=None, help="preset topology parameters")
    b.add_argument("--topologies", type=int, default=None, help="topologies per budget (default 100)")
    b.add_argument("--nodes", type=int, default=None, help="nodes per topology (default 60)")
    b.add_argument("--dmax", type=_float_list, default=None, help="budget sweep, comma separated (default 2,4,...,16)")
    b.add_argument("--methods", default=None, help="comma separated subset of greedy,exact,oracle (default greedy,exact)")
    b.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    b.add_argument("--time-limit", type=_positive_float, default=None, help="per-run exact limit in s (default 7200)")
    b.add_argument("--utility", choices=("added", "total"), default=None, help="greedy ranking (default added)")
    b.add_argument("--metric", choices=("euclidean", "squared"), default=None, help="travel-time metric (default euclidean)")
    b.add_argument("--backend", choices=("highs", "builtin"), default=None, help="exact backend (default highs)")
    b.add_argument("--workers", type=int, default=1, help="worker processes")
    b.add_argument("--out-dir", default=".", help="directory for records.csv and aggregate.csv")
    b.add_argument("--with-std", action="store_true", help="append standard-deviation columns to aggregate.csv")

    v = sub.add_parser("verify", help="cross-check exact, oracles and greedy on seeded instances", formatter_class=fmt)
    v.add_argument("--seeds", type=int, default=20, help="instances per size")
    v.add_argument("--min-n", type=int, default=2, help="smallest instance size")
    v.add_argument("--max-n", type=int, default=12, help="largest instance size (exact checks stop at 12, brute force at 9)")
    v.add_argument("--backend", choices=("highs", "builtin"), default="builtin", help="exact backend under test")
    v.add_argument("--dump-dir", default="verify-failures", help="where minimized failing instances are written")
    v.add_argument("--inject-fault", choices=("no-sec",), default=None,
                   help="deliberately break the exact solver (no-sec: never add subtour cuts)")
    return p


def cmd_generate(args) -> int:
    cfg = bench.ExperimentConfig(velocity_kmh=args.velocity)
    n = args.n
    if args.profile:
        preset = bench.PROFILES[args.profile]
        cfg = bench.ExperimentConfig(**{**preset, "velocity_kmh": args.velocity})
        n = n if n is not None else preset["nodes"]
    n = n if n is not None else cfg.nodes
    seed = args.seed if args.seed is not None else secrets.randbelow(2**32)
    inst = bench.generate_instance(n, seed, cfg, budget_min=args.budget)
    _write_text(args.output, inst.dumps())
    # keep stdout clean when the instance itself goes there
    print(f"seed {seed}", file=sys.stderr if args.output == "-" else sys.stdout)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = Instance.loads(Path(args.instance).read_text())
    if args.dmax is not None:
        inst = inst.with_budget(args.dmax)
    tm = inst.time_matrix(args.metric)
    start = time.monotonic()
    traj, report = bench.solve(inst, args.method, tm, args.time_limit, args.utility, args.backend)
    wall = time.monotonic() - start
    result = {
        **traj.to_dict(),
        "method": args.method,
        "status": report.status,
        "cut_rounds": report.cut_rounds,
        "wall_time_s": wall,
    }
    text = json.dumps(result) + "\n"
    sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text)
    if args.log:
        with open(args.log, "w") as fh:
            report.write_log(fh)
    print(
        f"score {traj.total_score:g} | journey {tour_time(traj, tm):.4f} of {inst.budget_min:g} min | "
        f"visited {len(traj.visited)} of {inst.n - 1} | {report.status} | {wall:.3f} s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_benchmark(args) -> int:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.profile:
        data = {**bench.PROFILES[args.profile], **data}
    overrides = {
        "topologies": args.topologies,
        "nodes": args.nodes,
        "dmax_sweep_min": args.dmax,
        "methods": args.methods.split(",") if args.methods else None,
        "master_seed": args.seed,
        "time_limit_s": args.time_limit,
        "utility": args.utility,
        "metric": args.metric,
        "backend": args.backend,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = bench.ExperimentConfig.from_json(json.dumps(data))
    if args.workers < 1:
        raise InvalidInputError("--workers must be at least 1")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, rows = bench.run_experiment(cfg, workers=args.workers)
    (out / "records.csv").write_text(bench.records_csv(records))
    agg = bench.aggregate_csv(rows, with_std=args.with_std)
    (out / "aggregate.csv").write_text(agg)
    sys.stdout.write(agg)
    failed = sum(1 for r in records if r.error)
    if failed:
        print(f"{failed} runs failed, see the error column of records.csv", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verification

    if args.seeds < 0 or args.min_n < 1 or args.max_n < args.min_n:
        raise InvalidInputError("need --seeds >= 0 and 1 <= --min-n <= --max-n")
    report = run_verification(
        args.seeds, max_n=args.max_n, min_n=args.min_n, backend=args.backend,
        fault=args.inject_fault, dump_dir=args.dump_dir,
    )
    for suite, count in report.checks.items():
        bad = sum(1 for m in report.mismatches if m.suite == suite)
        print(f"{suite}: {count - bad}/{count} agree")
    for n, ratios in sorted(report.greedy_ratios.items()):
        print(f"greedy/optimal at n={n}: mean {sum(ratios) / len(ratios):.4f} over {len(ratios)} instances")
    for m in report.mismatches:
        print(f"MISMATCH {m.suite} n={m.n} seed={m.seed}: {m.detail}; minimized to {m.instance.n} nodes"
              + (f", dumped to {m.dump_path}" if m.dump_path else ""))
    if report.vacuous:
        print("warning: no checks were run, the pass is vacuous", file=sys.stderr)
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_MISMATCH


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "benchmark": cmd_benchmark, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("ORIENTEER_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidInputError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
