"""Residual covariance matching and fuzzy-driven noise adjustment.

The filter's theoretical residual covariance is compared against a windowed
empirical average of residual outer products.  The per-axis difference (the
mismatch signal) drives one fuzzy inference per diagonal channel, and the
resulting adjustments are added onto the measurement noise diagonal (or, in
the experimental mode, collapsed onto the process noise diagonal).
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .ekf import StepDiagnostics
from .errors import InsufficientDataError
from .fuzzy import FisParams, infer

DEFAULT_WINDOW = 16
DEFAULT_R_FLOOR = 1e-6


class AdaptationMode(enum.Enum):
    """Which noise matrix the adjustment is applied to."""

    R_ADAPT = "r"
    Q_ADAPT_EXPERIMENTAL = "q"


class ResidualWindow:
    """Ring buffer of the most recent residual vectors, oldest evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._entries: deque[np.ndarray] = deque(maxlen=self.capacity)

    def push(self, residual: np.ndarray) -> None:
        res = np.array(residual, dtype=float)
        if res.shape != (3,):
            raise ValueError(f"residual must be a 3-vector, got shape {res.shape}")
        self._entries.append(res)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def is_full(self) -> bool:
        return len(self._entries) == self.capacity

    @property
    def entries(self) -> tuple[np.ndarray, ...]:
        return tuple(self._entries)


def window_average(window: ResidualWindow) -> np.ndarray:
    """Mean of residual outer products over the stored entries."""
    if len(window) == 0:
        raise InsufficientDataError("residual window is empty")
    total = np.zeros((3, 3))
    for res in window.entries:
        total += res[:, None] * res
    return total / len(window)


def present_covariance_r_mode(h: np.ndarray, p_prior: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Theoretical residual covariance H P_prior H' + R."""
    return h @ p_prior @ h.T + r


def present_covariance_q_mode(
    h: np.ndarray, a: np.ndarray, p: np.ndarray, q_mapped: np.ndarray, r: np.ndarray
) -> np.ndarray:
    """One-step-ahead residual covariance H (A P A' + Q_mapped) H' + R.

    ``q_mapped`` is the 2x2 process noise already mapped into state space
    as W Q W'.
    """
    return h @ (a @ p @ a.T + q_mapped) @ h.T + r


@dataclass(frozen=True)
class MismatchSignal:
    """Per-axis difference between theoretical and empirical covariances."""

    d: np.ndarray
    s: np.ndarray
    c_hat: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=float)
        s = np.array(self.s, dtype=float)
        c_hat = np.array(self.c_hat, dtype=float)
        if d.shape != (3,) or s.shape != (3, 3) or c_hat.shape != (3, 3):
            raise ValueError("mismatch signal has wrong shapes")
        for j in range(3):
            if abs(d[j] - (s[j, j] - c_hat[j, j])) > 1e-12:
                raise ValueError("d must equal diag(s) - diag(c_hat)")
        for name, arr in (("d", d), ("s", s), ("c_hat", c_hat)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def mismatch(s: np.ndarray, c_hat: np.ndarray) -> MismatchSignal:
    """Diagonal difference between present and averaged residual covariance."""
    s = np.asarray(s, dtype=float)
    c_hat = np.asarray(c_hat, dtype=float)
    return MismatchSignal(d=np.diag(s) - np.diag(c_hat), s=s, c_hat=c_hat)


def _diagonal(mat: np.ndarray, n: int, name: str, floor: float) -> np.ndarray:
    arr = np.array(mat, dtype=float)
    if arr.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got shape {arr.shape}")
    rows = arr.tolist()
    for i in range(n):
        for j in range(n):
            if i != j and rows[i][j] != 0.0:
                raise ValueError(f"{name} must be diagonal")
        if not rows[i][i] >= floor:
            raise ValueError(f"{name} diagonal entries must be >= {floor}")
    return arr


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal process (2x2) and measurement (3x3) noise covariances.

    Every diagonal entry is kept at or above ``r_floor`` so the innovation
    matrix stays invertible no matter how far adaptation pushes it down.
    """

    Q: np.ndarray
    R: np.ndarray
    r_floor: float = DEFAULT_R_FLOOR

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r_floor) and self.r_floor > 0.0):
            raise ValueError(f"r_floor must be > 0, got {self.r_floor!r}")
        q = _diagonal(self.Q, 2, "Q", self.r_floor)
        r = _diagonal(self.R, 3, "R", self.r_floor)
        q.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)

    @classmethod
    def from_sigmas(
        cls,
        sigma_ds: float,
        sigma_dtheta: float,
        r_diag,
        r_floor: float = DEFAULT_R_FLOOR,
    ) -> "NoiseModel":
        """Build from odometry standard deviations and an R diagonal.

        Variances below the floor are clamped up rather than rejected.
        """
        q = np.diag(np.maximum([sigma_ds**2, sigma_dtheta**2], r_floor))
        r = np.diag(np.maximum(np.asarray(r_diag, dtype=float), r_floor))
        return cls(Q=q, R=r, r_floor=r_floor)


def apply_adjustment(noise: NoiseModel, delta_r: np.ndarray) -> NoiseModel:
    """Add ``delta_r`` onto the R diagonal, clamping at the floor; Q unchanged."""
    delta = np.asarray(delta_r, dtype=float)
    new_diag = np.maximum(np.diag(noise.R) + delta, noise.r_floor)
    return NoiseModel(Q=noise.Q, R=np.diag(new_diag), r_floor=noise.r_floor)


def apply_q_adjustment(noise: NoiseModel, delta_q: np.ndarray) -> NoiseModel:
    """Add ``delta_q`` onto the Q diagonal, clamping at the floor; R unchanged."""
    delta = np.asarray(delta_q, dtype=float)
    new_diag = np.maximum(np.diag(noise.Q) + delta, noise.r_floor)
    return NoiseModel(Q=np.diag(new_diag), R=noise.R, r_floor=noise.r_floor)


@dataclass(frozen=True)
class AdaptationConfig:
    """Settings for the online adaptation loop."""

    mode: AdaptationMode = AdaptationMode.R_ADAPT
    window: int = DEFAULT_WINDOW
    r_floor: float = DEFAULT_R_FLOOR

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not (math.isfinite(self.r_floor) and self.r_floor > 0.0):
            raise ValueError(f"r_floor must be > 0, got {self.r_floor!r}")


_IDENTITY3 = np.eye(3)


def adapt_step(
    window: ResidualWindow,
    diag: StepDiagnostics,
    noise: NoiseModel,
    fis: FisParams,
    mode: AdaptationMode = AdaptationMode.R_ADAPT,
    *,
    a_jacobian: np.ndarray | None = None,
    w_jacobian: np.ndarray | None = None,
) -> NoiseModel:
    """Run one covariance-matching adaptation cycle.

    The window must already contain the current step's residual.  Until the
    window has filled to capacity no adjustment is made.  In the experimental
    Q mode the caller must supply the step's process Jacobians so the process
    noise can be mapped into state space; the three per-axis adjustments are
    collapsed onto the two Q diagonals (mean of the position channels onto
    the displacement variance, heading channel onto the heading variance).
    """
    if not window.is_full:
        return noise

    c_hat = window_average(window)
    if mode is AdaptationMode.R_ADAPT:
        s = present_covariance_r_mode(_IDENTITY3, diag.prior.covariance, noise.R)
    elif mode is AdaptationMode.Q_ADAPT_EXPERIMENTAL:
        if a_jacobian is None or w_jacobian is None:
            raise ValueError("Q adaptation requires the step's process Jacobians")
        posterior = (_IDENTITY3 - diag.kalman_gain) @ diag.prior.covariance
        posterior = 0.5 * (posterior + posterior.T)
        q_mapped = w_jacobian @ noise.Q @ w_jacobian.T
        s = present_covariance_q_mode(_IDENTITY3, a_jacobian, posterior, q_mapped, noise.R)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown adaptation mode {mode!r}")

    signal = mismatch(s, c_hat)
    delta = np.array([infer(float(signal.d[j]), fis) for j in range(3)])
    if mode is AdaptationMode.R_ADAPT:
        return apply_adjustment(noise, delta)
    collapsed = np.array([0.5 * (delta[0] + delta[1]), delta[2]])
    return apply_q_adjustment(noise, collapsed)
