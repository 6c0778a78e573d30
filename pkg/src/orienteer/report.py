from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class SolveReport:
    """What a solver did: objective, bounds per lazy-cut round, effort and timing."""

    method: str
    best_objective: float = 0.0
    status: str = "optimal"
    bound_history: list[float] = field(default_factory=list)
    cut_rounds: int = 0
    cuts_added: int = 0
    nodes_explored: int = 0
    iterations: int = 0
    wall_time_s: float = 0.0
    rounds: list[dict] = field(default_factory=list)

    @property
    def final_bound(self) -> float | None:
        return self.bound_history[-1] if self.bound_history else None

    def to_dict(self) -> dict:
        return asdict(self)

    def write_log(self, fh) -> None:
        """One JSON object per lazy-cut round."""
        for row in self.rounds:
            fh.write(json.dumps(row) + "\n")
