"""Deterministic trace and summary emission for external plotting.

Traces are CSV with fixed nine-decimal formatting; summaries are JSON with
stable key order.  Identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .simulate import AXES, ModeSummary, MonteCarloSummary, TrialTrace

TRACE_HEADER = (
    "step,true_x,true_y,true_theta,dr_x,dr_y,dr_theta,"
    "est_x,est_y,est_theta,r1,r2,r3,R11,R22,R33,P11,P22,P33"
)


def write_trace(trace: TrialTrace, path: str | Path) -> None:
    """Write one trial as CSV, one row per step after the header."""
    lines = [TRACE_HEADER]
    for k in range(len(trace)):
        values = np.concatenate(
            [
                trace.true_poses[k],
                trace.dead_reckoned[k],
                trace.estimates[k],
                trace.residuals[k],
                trace.noise_r_diag[k],
                trace.cov_diag[k],
            ]
        )
        lines.append(f"{k + 1}," + ",".join(f"{v:.9f}" for v in values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> TrialTrace:
    """Parse a trace CSV back into arrays."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: not a trace file (bad header)")
    rows = np.array(
        [[float(v) for v in line.split(",")[1:]] for line in lines[1:]]
    ).reshape(-1, 18)
    return TrialTrace(
        true_poses=rows[:, 0:3],
        dead_reckoned=rows[:, 3:6],
        estimates=rows[:, 6:9],
        residuals=rows[:, 9:12],
        noise_r_diag=rows[:, 12:15],
        cov_diag=rows[:, 15:18],
    )


def summary_to_dict(summary: MonteCarloSummary) -> dict:
    return {
        "runs": summary.runs,
        "seed": summary.base_seed,
        "modes": {
            name: {
                "run_mean": {axis: mode.run_mean[axis] for axis in AXES},
                "per_step": {axis: list(map(float, mode.per_step[axis])) for axis in AXES},
            }
            for name, mode in summary.modes.items()
        },
        "config": summary.config_echo,
    }


def write_summary(summary: MonteCarloSummary, path: str | Path) -> None:
    """Write a Monte Carlo summary as JSON with stable key order."""
    Path(path).write_text(json.dumps(summary_to_dict(summary), indent=2) + "\n")


def read_summary(path: str | Path) -> MonteCarloSummary:
    """Parse a summary JSON back into the summary structure."""
    data = json.loads(Path(path).read_text())
    modes = {
        name: ModeSummary(
            per_step={axis: np.array(entry["per_step"][axis]) for axis in AXES},
            run_mean={axis: float(entry["run_mean"][axis]) for axis in AXES},
        )
        for name, entry in data["modes"].items()
    }
    return MonteCarloSummary(
        runs=data["runs"],
        base_seed=data["seed"],
        modes=modes,
        config_echo=data.get("config"),
    )
