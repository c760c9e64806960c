"""Registration reports: per-iteration CSV and a plain-text summary.

The CSV holds only deterministic columns so identical configurations and
seeds produce byte-identical files; wall-clock timings appear in the text
report only.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

from .solver import IterationRecord

CSV_COLUMNS = ("outer", "energy", "mse_rel", "grad_rel", "pcg_iters", "step",
               "negative_curvature")


@dataclass
class RegistrationReport:
    records: list[IterationRecord]
    status: str
    final_mse_rel: float
    final_grad_rel: float
    jacobian_min: float
    jacobian_max: float
    settings: dict = field(default_factory=dict)
    dsc: dict = field(default_factory=dict)
    total_time: float = 0.0
    negative_curvature_events: int = 0
    total_pcg_iters: int = 0

    def __post_init__(self):
        if self.final_mse_rel < 0:
            raise ValueError("relative mismatch cannot be negative")
        if self.jacobian_min > self.jacobian_max:
            raise ValueError("Jacobian extrema out of order")
        for value in self.dsc.values():
            if not 0.0 <= value <= 1.0:
                raise ValueError("DSC values must lie in [0, 1]")

    @property
    def accepted_steps(self) -> int:
        return sum(1 for r in self.records if r.step > 0)


def records_to_csv(records: list[IterationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([
            r.outer, repr(r.energy), repr(r.mse_rel), repr(r.grad_rel),
            r.pcg_iters, repr(r.step), int(r.negative_curvature),
        ])
    return buf.getvalue()


def write_csv(records: list[IterationRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def report_text(report: RegistrationReport) -> str:
    lines = ["registration report", "===================", ""]
    lines.append(f"status: {report.status}")
    lines.append(f"accepted outer iterations: {report.accepted_steps}")
    lines.append(f"final mse_rel [%]: {report.final_mse_rel:.4f}")
    lines.append(f"final relative gradient: {report.final_grad_rel:.6f}")
    lines.append(f"jacobian determinant extrema: "
                 f"[{report.jacobian_min:.4f}, {report.jacobian_max:.4f}]")
    lines.append(f"inner solver iterations (total): {report.total_pcg_iters}")
    lines.append(f"negative curvature events: {report.negative_curvature_events}")
    lines.append(f"total wall time [s]: {report.total_time:.2f}")
    if report.dsc:
        lines.append("")
        lines.append("label overlap (DSC):")
        for label, value in sorted(report.dsc.items()):
            lines.append(f"  label {label}: {value:.4f}")
    lines.append("")
    lines.append("settings:")
    for key, value in report.settings.items():
        lines.append(f"  {key} = {value}")
    lines.append("")
    return "\n".join(lines)


def write_report(report: RegistrationReport, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(report_text(report))
