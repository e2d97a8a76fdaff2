"""Three-state extended Kalman filter for the planar pose model.

The measurement model is the identity pose observation, so H = V = I and the
innovation covariance is ``P_prior + R``.  Covariances are re-symmetrised
after every propagation and update to stop round-off drift, and the gain is
obtained through a Cholesky solve rather than an explicit inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalFailure
from .robot import MotionIncrement, Pose, _propagate, process_jacobians, wrap_angle

if TYPE_CHECKING:  # pragma: no cover
    from .adaptation import NoiseModel

# Invariant tolerances for stored covariances.
_SYM_ATOL = 1e-12
_PSD_SHIFT = 1e-9


def _cholesky_ok(rows: list[list[float]], n: int, shift: float) -> bool:
    """Whether ``rows + shift * I`` admits a Cholesky factor (scalar path).

    Runs the textbook factorisation on a local copy and reports failure
    instead of raising; equivalent to eigenvalues > -shift up to round-off.
    """
    a = [row[:] for row in rows]
    for i in range(n):
        a[i][i] += shift
    for k in range(n):
        d = a[k][k]
        for t in range(k):
            d -= a[k][t] * a[k][t]
        if d <= 0.0:
            return False
        d = math.sqrt(d)
        a[k][k] = d
        for i in range(k + 1, n):
            s = a[i][k]
            for t in range(k):
                s -= a[i][t] * a[k][t]
            a[i][k] = s / d
    return True


def _check_spd_shape(mat: np.ndarray, n: int, name: str, shift: float) -> np.ndarray:
    """Validate an (n, n) symmetric matrix that must be PSD up to ``shift``.

    With ``shift == 0`` the matrix must be strictly positive definite.
    Checks run on Python scalars: these matrices are tiny and sit on the
    per-step hot path.
    """
    arr = np.array(mat, dtype=float)
    if arr.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got shape {arr.shape}")
    rows = arr.tolist()
    for i in range(n):
        for j in range(i, n):
            v = rows[i][j]
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            if j > i and abs(v - rows[j][i]) > _SYM_ATOL:
                raise ValueError(f"{name} must be symmetric within {_SYM_ATOL}")
    if not _cholesky_ok(rows, n, shift):
        raise ValueError(f"{name} is not positive semidefinite")
    return arr


@dataclass(frozen=True)
class FilterState:
    """Pose estimate plus its 3x3 error covariance."""

    estimate: Pose
    covariance: np.ndarray

    def __post_init__(self) -> None:
        cov = _check_spd_shape(self.covariance, 3, "covariance", _PSD_SHIFT)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step quantities consumed by the noise-adaptation layer."""

    residual: np.ndarray
    kalman_gain: np.ndarray
    prior: FilterState

    def __post_init__(self) -> None:
        res = np.array(self.residual, dtype=float)
        if res.shape != (3,):
            raise ValueError(f"residual must be a 3-vector, got shape {res.shape}")
        if not -np.pi < res[2] <= np.pi:
            raise ValueError(f"residual heading component {res[2]!r} is not wrapped")
        res.setflags(write=False)
        object.__setattr__(self, "residual", res)
        gain = np.array(self.kalman_gain, dtype=float)
        if gain.shape != (3, 3):
            raise ValueError(f"kalman_gain must be 3x3, got shape {gain.shape}")
        gain.setflags(write=False)
        object.__setattr__(self, "kalman_gain", gain)


def predict(state: FilterState, m: MotionIncrement, q: np.ndarray) -> FilterState:
    """Time update: propagate the estimate and covariance through the model.

    ``q`` is the 2x2 process noise covariance on ``(ds, dtheta)``; it must be
    symmetric PSD.  The covariance becomes ``A P A' + W Q W'``, symmetrised.
    """
    q = _check_spd_shape(q, 2, "process noise Q", _PSD_SHIFT)
    a, w = process_jacobians(state.estimate, m)
    estimate = _propagate(state.estimate, m.ds, m.dtheta)
    cov = a @ state.covariance @ a.T + w @ q @ w.T
    cov = 0.5 * (cov + cov.T)
    return FilterState(estimate=estimate, covariance=cov)


def correct(
    prior: FilterState, z: np.ndarray, r: np.ndarray
) -> tuple[FilterState, StepDiagnostics]:
    """Measurement update against an observed pose ``z``.

    The heading residual is wrapped into (-pi, pi] before the update and the
    updated heading is wrapped afterwards.  ``r`` must be symmetric positive
    definite; a non-invertible innovation matrix raises NumericalFailure.
    """
    r = _check_spd_shape(r, 3, "measurement noise R", 0.0)
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise ValueError(f"measurement must be a 3-vector, got shape {z.shape}")

    predicted = prior.estimate.as_array()
    residual = z - predicted
    residual[2] = wrap_angle(residual[2])

    innovation = prior.covariance + r  # H = V = I
    try:
        factor = cho_factor(innovation, lower=True, check_finite=False)
        # K = P S^-1; both symmetric, so solve S K' = P and transpose.
        gain = cho_solve(factor, prior.covariance, check_finite=False).T
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"innovation matrix is singular: {exc}") from exc

    updated = predicted + gain @ residual
    estimate = Pose(float(updated[0]), float(updated[1]), float(updated[2]))
    cov = (np.eye(3) - gain) @ prior.covariance
    cov = 0.5 * (cov + cov.T)
    state = FilterState(estimate=estimate, covariance=cov)
    return state, StepDiagnostics(residual=residual, kalman_gain=gain, prior=prior)


def step(
    state: FilterState, m: MotionIncrement, z: np.ndarray, noise: "NoiseModel"
) -> tuple[FilterState, StepDiagnostics]:
    """One full predict-then-correct cycle under the given noise model."""
    prior = predict(state, m, noise.Q)
    return correct(prior, z, noise.R)
