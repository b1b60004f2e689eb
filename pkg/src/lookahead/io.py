"""CSV emission for per-trial metrics and per-design curves, plus run manifests."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ContractViolation
from .harness import MetricsTable

METRICS_HEADER = ("trial", "mse_p1", "mse_p2", "info_gain", "ud_mean", "rd_mean",
                  "width_immediate", "width_next")
CURVES_HEADER = ("trial", "design_index", "design", "immediate", "expected_next")


def fmt(x) -> str:
    return format(float(x), ".12g")


def _write_rows(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def emit_metrics_csv(table: MetricsTable, path) -> Path:
    if table.trials == 0:
        raise ContractViolation("metrics table is empty")
    mse = np.asarray(table.mse)
    if mse.shape[1] != 2:
        raise ContractViolation("metrics CSV expects exactly two parameters")

    def opt(arr, t):
        return "" if arr is None else fmt(arr[t])

    rows = [
        [str(t + 1), fmt(mse[t, 0]), fmt(mse[t, 1]), fmt(table.info_gain[t]),
         opt(table.ud_mean, t), opt(table.rd_mean, t),
         opt(table.width_immediate, t), opt(table.width_next, t)]
        for t in range(table.trials)
    ]
    return _write_rows(path, METRICS_HEADER, rows)


def emit_curves_csv(table: MetricsTable, trials: Iterable[int], path) -> Path:
    """Replication-averaged immediate and expected-next curves at selected trials."""
    if not table.has_diagnostics:
        raise ContractViolation("curves need a table with diagnostics")
    rows = []
    for t in trials:
        if not 1 <= t <= table.trials:
            raise ContractViolation(f"trial {t} outside 1..{table.trials}")
        for j, d in enumerate(table.design_points):
            rows.append([str(t), str(j), fmt(d), fmt(table.mean_immediate[t - 1, j]),
                         fmt(table.mean_next[t - 1, j])])
    return _write_rows(path, CURVES_HEADER, rows)


@dataclass
class RunManifest:
    command: str
    config: str
    engine_version: str
    seed: int
    timestamp: str
    outputs: list[str] = field(default_factory=list)
    notes: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


MANIFEST_NOTES = {
    "log_base": "natural log; entropy, utilities, UD are in nats",
    "myopic_two_step_total": (
        "max_d u(d|p_t) plus E_y max_d' u(d'|p_t updated by (d_myopic, y)), "
        "y drawn from the predictive of the myopic design"),
    "ud_rd_averaging": "UD and RD computed per replication and trial, then averaged",
    "estimator": "posterior mean over the grid",
    "global_t_step": "response-contingent policy tree, re-solved every T trials",
    "flush_threshold": "weights and likelihoods below 1e-150 are zeroed inside lookahead solves",
}
