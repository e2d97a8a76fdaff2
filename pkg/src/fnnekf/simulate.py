"""Trajectory generation, noise injection, and Monte Carlo evaluation.

A trial plays a scripted trajectory through the filter: ground-truth motion
increments are corrupted with odometry noise, pose measurements are
synthesised from the true pose, and the filter consumes both.  In adaptive
mode the residual stream additionally drives the fuzzy noise adjustment.
Everything is reproducible: a trial is a pure function of its seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import ekf
from .adaptation import (
    AdaptationConfig,
    AdaptationMode,
    NoiseModel,
    ResidualWindow,
    adapt_step,
)
from .errors import NumericalFailure
from .fuzzy import FisParams
from .robot import (
    MotionIncrement,
    Pose,
    RobotGeometry,
    dead_reckon_step,
    process_jacobians,
    wrap_angle,
)


class FilterMode(enum.Enum):
    EKF = "ekf"
    FNN_EKF = "fnn-ekf"


@dataclass(frozen=True)
class Straight:
    length: float

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ValueError(f"straight length must be > 0, got {self.length!r}")


@dataclass(frozen=True)
class Arc:
    radius: float
    sweep: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError(f"arc radius must be > 0, got {self.radius!r}")
        if self.sweep == 0.0 or not math.isfinite(self.sweep):
            raise ValueError(f"arc sweep must be nonzero, got {self.sweep!r}")


Segment = Straight | Arc


@dataclass(frozen=True)
class TrajectorySpec:
    """Scripted path: straights and constant-curvature arcs, discretised
    into steps of roughly ``step_ds`` metres each."""

    segments: tuple[Segment, ...]
    step_ds: float

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("trajectory must contain at least one segment")
        if self.step_ds <= 0.0:
            raise ValueError(f"step_ds must be > 0, got {self.step_ds!r}")


@dataclass(frozen=True)
class SimNoiseConfig:
    """True noise levels: odometry deviations and measurement covariance."""

    sigma_ds: float
    sigma_dtheta: float
    meas_R: np.ndarray

    def __post_init__(self) -> None:
        if self.sigma_ds < 0.0 or self.sigma_dtheta < 0.0:
            raise ValueError("noise deviations must be >= 0")
        r = np.array(self.meas_R, dtype=float)
        if r.shape != (3, 3) or np.any(r != np.diag(np.diag(r))):
            raise ValueError("meas_R must be a 3x3 diagonal matrix")
        if np.any(np.diag(r) <= 0.0):
            raise ValueError("meas_R diagonal must be positive definite")
        r.setflags(write=False)
        object.__setattr__(self, "meas_R", r)


@dataclass(frozen=True)
class TruthPath:
    """Ground truth: start pose, post-step poses, and the increments that
    connect them (replaying the increments reproduces the poses exactly)."""

    start: Pose
    poses: tuple[Pose, ...]
    increments: tuple[MotionIncrement, ...]


def generate_truth(
    spec: TrajectorySpec, wheel_base: float, start: Pose = Pose(0.0, 0.0, 0.0)
) -> TruthPath:
    """Discretise the scripted path into per-step increments and true poses."""
    increments: list[MotionIncrement] = []
    for segment in spec.segments:
        if isinstance(segment, Straight):
            n = max(1, round(segment.length / spec.step_ds))
            inc = MotionIncrement.from_center(segment.length / n, 0.0, wheel_base)
            increments.extend([inc] * n)
        else:
            arc_length = segment.radius * abs(segment.sweep)
            n = max(1, round(arc_length / spec.step_ds))
            inc = MotionIncrement.from_center(arc_length / n, segment.sweep / n, wheel_base)
            increments.extend([inc] * n)
    poses: list[Pose] = []
    pose = start
    for inc in increments:
        pose = dead_reckon_step(pose, inc)
        poses.append(pose)
    return TruthPath(start=start, poses=tuple(poses), increments=tuple(increments))


def corrupt_odometry(
    increments,
    cfg: SimNoiseConfig,
    rng: np.random.Generator,
    wheel_base: float,
) -> tuple[MotionIncrement, ...]:
    """Add independent zero-mean Gaussian noise to every (ds, dtheta)."""
    noisy = []
    for inc in increments:
        ds = inc.ds + rng.normal(0.0, cfg.sigma_ds)
        dtheta = inc.dtheta + rng.normal(0.0, cfg.sigma_dtheta)
        noisy.append(MotionIncrement.from_center(ds, dtheta, wheel_base))
    return tuple(noisy)


def synthesize_measurement(
    true_pose: Pose, meas_r: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Observe the true pose through independent per-axis Gaussian noise."""
    stds = np.sqrt(np.diag(np.asarray(meas_r, dtype=float)))
    z = true_pose.as_array() + rng.normal(0.0, 1.0, 3) * stds
    z[2] = wrap_angle(z[2])
    return z


@dataclass(frozen=True)
class SimConfig:
    """Everything a single trial needs besides the trajectory and mode."""

    geometry: RobotGeometry
    noise: SimNoiseConfig
    adaptation: AdaptationConfig = AdaptationConfig()
    r_scale: float = 1.0
    p0_diag: float = 1e-4

    def __post_init__(self) -> None:
        if self.r_scale <= 0.0:
            raise ValueError(f"r_scale must be > 0, got {self.r_scale!r}")
        if self.p0_diag < 0.0:
            raise ValueError(f"p0_diag must be >= 0, got {self.p0_diag!r}")

    def initial_noise_model(self) -> NoiseModel:
        """Filter noise: true Q, measurement R scaled by the mismatch knob."""
        return NoiseModel.from_sigmas(
            self.noise.sigma_ds,
            self.noise.sigma_dtheta,
            self.r_scale * np.diag(self.noise.meas_R),
            r_floor=self.adaptation.r_floor,
        )


@dataclass(frozen=True)
class TrialTrace:
    """Per-step record of one trial; all arrays share the same length."""

    true_poses: np.ndarray
    dead_reckoned: np.ndarray
    estimates: np.ndarray
    residuals: np.ndarray
    noise_r_diag: np.ndarray
    cov_diag: np.ndarray

    def __post_init__(self) -> None:
        shapes = set()
        for name in (
            "true_poses",
            "dead_reckoned",
            "estimates",
            "residuals",
            "noise_r_diag",
            "cov_diag",
        ):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, 3)
            object.__setattr__(self, name, arr)
            shapes.add(arr.shape)
        if len(shapes) != 1 or next(iter(shapes))[1:] != (3,):
            raise ValueError("trace arrays must all be (n, 3)")

    def __len__(self) -> int:
        return int(self.true_poses.shape[0])


def _trial_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    # Named substreams keep odometry and measurement draws independent and
    # identical across filter modes for the same seed.
    odo = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    meas = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    return odo, meas


def run_trial(
    spec: TrajectorySpec,
    cfg: SimConfig,
    mode: FilterMode,
    fis: FisParams,
    seed: int,
) -> TrialTrace:
    """Play one noisy trajectory through the chosen filter mode."""
    wheel_base = cfg.geometry.wheel_base
    truth = generate_truth(spec, wheel_base)
    odo_rng, meas_rng = _trial_rngs(seed)
    noisy = corrupt_odometry(truth.increments, cfg.noise, odo_rng, wheel_base)
    measurements = [
        synthesize_measurement(pose, cfg.noise.meas_R, meas_rng) for pose in truth.poses
    ]

    noise = cfg.initial_noise_model()
    state = ekf.FilterState(
        estimate=truth.start, covariance=np.eye(3) * cfg.p0_diag
    )
    window = ResidualWindow(cfg.adaptation.window)
    dr_pose = truth.start
    q_mode = cfg.adaptation.mode is AdaptationMode.Q_ADAPT_EXPERIMENTAL

    n = len(truth.increments)
    out = {name: np.empty((n, 3)) for name in (
        "true", "dr", "est", "res", "r_diag", "p_diag")}
    for k in range(n):
        inc = noisy[k]
        if mode is FilterMode.FNN_EKF and q_mode:
            a_jac, w_jac = process_jacobians(state.estimate, inc)
        else:
            a_jac = w_jac = None
        try:
            state, diag = ekf.step(state, inc, measurements[k], noise)
        except NumericalFailure as exc:
            raise NumericalFailure(f"filter failed at step {k + 1}: {exc}") from exc
        dr_pose = dead_reckon_step(dr_pose, inc)
        if mode is FilterMode.FNN_EKF:
            window.push(diag.residual)
            noise = adapt_step(
                window,
                diag,
                noise,
                fis,
                mode=cfg.adaptation.mode,
                a_jacobian=a_jac,
                w_jacobian=w_jac,
            )
        out["true"][k] = truth.poses[k].as_array()
        out["dr"][k] = dr_pose.as_array()
        out["est"][k] = state.estimate.as_array()
        out["res"][k] = diag.residual
        out["r_diag"][k] = np.diag(noise.R)
        out["p_diag"][k] = np.diag(state.covariance)
    return TrialTrace(
        true_poses=out["true"],
        dead_reckoned=out["dr"],
        estimates=out["est"],
        residuals=out["res"],
        noise_r_diag=out["r_diag"],
        cov_diag=out["p_diag"],
    )


AXES = ("x", "y", "theta")


def pose_errors(trace: TrialTrace) -> np.ndarray:
    """Estimate-minus-truth per step; heading differences are wrapped."""
    err = trace.estimates - trace.true_poses
    err[:, 2] = [wrap_angle(float(v)) for v in err[:, 2]]
    return err


def per_step_rmse(traces, axis: int) -> np.ndarray:
    """RMSE across runs at each step index for one pose axis."""
    traces = list(traces)
    if not traces:
        raise ValueError("at least one trace is required")
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have mismatched lengths: {sorted(lengths)}")
    errors = np.stack([pose_errors(t)[:, axis] for t in traces])
    return np.sqrt(np.mean(errors**2, axis=0))


def mean_rmse(traces, axis: int) -> float:
    """Scalar summary: the per-step RMSE series averaged over steps."""
    return float(np.mean(per_step_rmse(traces, axis)))


@dataclass(frozen=True)
class ModeSummary:
    per_step: dict[str, np.ndarray]
    run_mean: dict[str, float]


@dataclass(frozen=True)
class MonteCarloSummary:
    runs: int
    base_seed: int
    modes: dict[str, ModeSummary]
    config_echo: dict | None = None

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")


def _run_seeds(base_seed: int, runs: int) -> np.ndarray:
    return np.random.default_rng(base_seed).integers(0, 2**63, size=runs)


def monte_carlo(
    spec: TrajectorySpec,
    cfg: SimConfig,
    modes,
    fis: FisParams,
    runs: int,
    base_seed: int,
) -> MonteCarloSummary:
    """Paired Monte Carlo comparison: every mode replays the exact same noise
    realisations run for run, so differences isolate the filtering strategy."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    seeds = _run_seeds(base_seed, runs)
    summaries: dict[str, ModeSummary] = {}
    for mode in modes:
        traces = [run_trial(spec, cfg, mode, fis, int(seed)) for seed in seeds]
        per_step = {name: per_step_rmse(traces, axis) for axis, name in enumerate(AXES)}
        run_mean = {name: float(np.mean(series)) for name, series in per_step.items()}
        summaries[mode.value] = ModeSummary(per_step=per_step, run_mean=run_mean)
    return MonteCarloSummary(runs=runs, base_seed=base_seed, modes=summaries)
