"""Cross-checks between the exact solver, the oracles and greedy."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .bench import generate_instance, half_reach_budget
from .exact import lazy_sec_loop
from .greedy import greedy_build
from .model import Instance
from .oracle import dp_optimal, permutation_bruteforce

log = logging.getLogger(__name__)

EXACT_MAX_N = 12
BRUTE_MAX_N = 9
OBJ_TOL = 1e-6


@dataclass
class Mismatch:
    suite: str
    n: int
    seed: int
    detail: str
    instance: Instance
    dump_path: str | None = None


@dataclass
class VerifyReport:
    checks: dict[str, int] = field(default_factory=dict)
    mismatches: list[Mismatch] = field(default_factory=list)
    greedy_ratios: dict[int, list[float]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    @property
    def vacuous(self) -> bool:
        return not any(self.checks.values())


def verification_instance(n: int, seed: int) -> Instance:
    inst = generate_instance(n, seed)
    return inst.with_budget(half_reach_budget(inst))


def _exact(inst, backend, fault):
    return lazy_sec_loop(inst, backend=backend, separate=fault != "no-sec")[1].best_objective


def minimize_instance(inst: Instance, still_fails: Callable[[Instance], bool]) -> Instance:
    """Drop non-depot nodes one at a time while the failure persists."""
    current = inst
    changed = True
    while changed and current.n > 1:
        changed = False
        for v in [u for u in current.nodes if u != current.depot]:
            keep = [u for u in current.nodes if u != v]
            smaller = Instance(
                tuple(current.coords[u] for u in keep),
                tuple(current.scores[u] for u in keep),
                keep.index(current.depot),
                current.velocity_kmh,
                current.budget_min,
            )
            if still_fails(smaller):
                current, changed = smaller, True
                break
    return current


def run_verification(
    seeds: int,
    max_n: int = EXACT_MAX_N,
    min_n: int = 2,
    backend: str = "builtin",
    fault: str | None = None,
    dump_dir: str | Path | None = None,
    suites=("exact-dp", "dp-brute", "greedy-exact"),
) -> VerifyReport:
    report = VerifyReport(checks={s: 0 for s in suites})

    def record(suite, n, seed, inst, detail, fails):
        small = minimize_instance(inst, fails)
        mm = Mismatch(suite, n, seed, detail, small)
        if dump_dir is not None:
            out = Path(dump_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"mismatch-{suite}-n{n}-seed{seed}.json"
            payload = {"suite": suite, "n": n, "seed": seed, "detail": detail, "instance": small.to_dict()}
            if suite == "exact-dp":
                _, rep = lazy_sec_loop(small, backend=backend, separate=fault != "no-sec")
                payload["exact_rounds"] = rep.rounds
                payload["subtours"] = rep.rounds[-1]["subtours"] if rep.rounds else []
            path.write_text(json.dumps(payload, indent=2) + "\n")
            mm.dump_path = str(path)
        report.mismatches.append(mm)
        log.error("%s mismatch at n=%d seed=%d: %s", suite, n, seed, detail)

    for n in range(min_n, max_n + 1):
        for seed in range(seeds):
            inst = verification_instance(n, seed)
            dp_obj = None
            if n <= EXACT_MAX_N and {"exact-dp", "greedy-exact"} & set(suites):
                dp_obj = dp_optimal(inst)[1]
                ex_obj = _exact(inst, backend, fault)
                if "exact-dp" in suites:
                    report.checks["exact-dp"] += 1
                    if abs(ex_obj - dp_obj) > OBJ_TOL:
                        record(
                            "exact-dp", n, seed, inst, f"exact {ex_obj!r} vs dp {dp_obj!r}",
                            lambda i: abs(_exact(i, backend, fault) - dp_optimal(i)[1]) > OBJ_TOL,
                        )
                if "greedy-exact" in suites:
                    report.checks["greedy-exact"] += 1
                    g = greedy_build(inst)[0].total_score
                    if dp_obj > 0:
                        report.greedy_ratios.setdefault(n, []).append(g / dp_obj)
                    if g > ex_obj + 1e-9:
                        record(
                            "greedy-exact", n, seed, inst, f"greedy {g!r} above exact {ex_obj!r}",
                            lambda i: greedy_build(i)[0].total_score > _exact(i, backend, fault) + 1e-9,
                        )
            if n <= BRUTE_MAX_N and "dp-brute" in suites:
                report.checks["dp-brute"] += 1
                dp_obj = dp_obj if dp_obj is not None else dp_optimal(inst)[1]
                bf_obj = permutation_bruteforce(inst)[1]
                if dp_obj != bf_obj:
                    record(
                        "dp-brute", n, seed, inst, f"dp {dp_obj!r} vs brute force {bf_obj!r}",
                        lambda i: dp_optimal(i)[1] != permutation_bruteforce(i)[1],
                    )
    return report
