"""Solver run reports: per-iteration traces with CSV/JSON serialization.

Each solver appends one record per visited iterate; the record for iterate
k also carries the step taken from k (backtrack count, step size).  The
final record describes the stopping state and has m_k = 0, alpha_k = 0.
Trace rows may hold extra in-memory keys beyond the CSV schema; only the
declared columns are serialized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

STATUS_CONVERGED = "converged"
STATUS_ITERATION_CAP = "iteration_cap"
STATUS_BACKTRACK_CAP = "backtrack_cap"
STATUS_NUMERIC_ERROR = "numeric_error"

BOUND_COLUMNS = ("k", "f", "scaled_grad_norm", "eps_k", "omega_k", "n_plus",
                 "m_k", "alpha_k", "time_s")
L1_COLUMNS = ("k", "stage", "gamma", "psi", "residual", "n_plus",
              "support_size", "m_k", "alpha_k", "time_s")

_INT_COLUMNS = {"k", "stage", "n_plus", "support_size", "m_k"}


def _cell(name: str, value) -> str:
    if name in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


@dataclass
class SolverReport:
    """Outcome of one solver run: final point, status, and iteration trace."""

    x: np.ndarray
    status: str
    trace: list[dict]
    columns: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    @property
    def iterations(self) -> int:
        """Number of accepted steps (trace rows minus the stopping record)."""
        return max(0, len(self.trace) - 1)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.trace], dtype=float)

    def to_csv(self, path, zero_time: bool = False) -> None:
        """Write the trace; zero_time replaces wall times with 0.0 so that
        repeated runs produce byte-identical files."""
        lines = [",".join(self.columns)]
        for row in self.trace:
            vals = []
            for name in self.columns:
                v = 0.0 if (zero_time and name == "time_s") else row[name]
                vals.append(_cell(name, v))
            lines.append(",".join(vals))
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)

    def to_json_dict(self, zero_time: bool = False) -> dict:
        trace = []
        for row in self.trace:
            rec = {name: row[name] for name in self.columns}
            if zero_time:
                rec["time_s"] = 0.0
            trace.append(rec)
        meta = {k: v for k, v in self.meta.items()
                if isinstance(v, (int, float, str, bool, type(None)))}
        return {
            "status": self.status,
            "x": [float(v) for v in self.x],
            "iterations": self.iterations,
            "trace": trace,
            "meta": meta,
        }

    def to_json(self, zero_time: bool = False) -> str:
        return json.dumps(self.to_json_dict(zero_time=zero_time), indent=2, sort_keys=True)
