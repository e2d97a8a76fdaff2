"""Differential-drive kinematics, dead reckoning, and model Jacobians.

State convention: planar pose ``[x, y, theta]`` with ``theta`` in radians,
always wrapped to ``(-pi, pi]``.  Motion is described by per-step increments
``(ds, dtheta)`` derived from left/right wheel displacements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral

import numpy as np

TWO_PI = 2.0 * math.pi

# Tolerance for the ds = (ds_left + ds_right) / 2 consistency check.
_INCREMENT_ATOL = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]; idempotent and 2*pi periodic."""
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    return math.pi - (math.pi - theta) % TWO_PI


@dataclass(frozen=True)
class RobotGeometry:
    """Physical constants of a two-wheeled differential-drive base.

    ``wheel_diameter`` and ``wheel_base`` are metres, ``gear_ratio`` is the
    motor-to-wheel reduction, ``encoder_resolution`` is pulses per wheel
    revolution.  All must be strictly positive.
    """

    wheel_diameter: float
    wheel_base: float
    gear_ratio: float
    encoder_resolution: float

    def __post_init__(self) -> None:
        for name in ("wheel_diameter", "wheel_base", "gear_ratio", "encoder_resolution"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class EncoderTicks:
    """Signed pulse counts from the left and right wheel encoders."""

    left: int
    right: int

    def __post_init__(self) -> None:
        for name in ("left", "right"):
            value = getattr(self, name)
            if not isinstance(value, Integral):
                raise ValueError(f"{name} tick count must be an integer, got {value!r}")


@dataclass(frozen=True)
class MotionIncrement:
    """One step of robot motion: centre displacement plus heading change.

    ``ds`` is the linear displacement of the wheelbase centre and ``dtheta``
    the heading change, both derived from the per-wheel displacements.  Use
    :meth:`from_wheels` or :meth:`from_center` so the wheel consistency
    relations hold; direct construction checks the centre-mean relation only.
    """

    ds: float
    dtheta: float
    ds_left: float
    ds_right: float

    def __post_init__(self) -> None:
        for name in ("ds", "dtheta", "ds_left", "ds_right"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        mean = 0.5 * (self.ds_left + self.ds_right)
        if abs(self.ds - mean) > _INCREMENT_ATOL * max(1.0, abs(self.ds)):
            raise ValueError(
                f"ds={self.ds!r} is not the mean of wheel displacements "
                f"({self.ds_left!r}, {self.ds_right!r})"
            )

    @classmethod
    def from_wheels(cls, ds_left: float, ds_right: float, wheel_base: float) -> "MotionIncrement":
        """Build from per-wheel displacements and the wheel separation."""
        ds = 0.5 * (ds_left + ds_right)
        dtheta = (ds_right - ds_left) / wheel_base
        return cls(ds=ds, dtheta=dtheta, ds_left=ds_left, ds_right=ds_right)

    @classmethod
    def from_center(cls, ds: float, dtheta: float, wheel_base: float) -> "MotionIncrement":
        """Build from centre motion, back-computing consistent wheel values."""
        half = 0.5 * dtheta * wheel_base
        return cls(ds=ds, dtheta=dtheta, ds_left=ds - half, ds_right=ds + half)


@dataclass(frozen=True)
class Pose:
    """Planar position and heading; ``theta`` is wrapped at construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Pose":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


def conversion_factor(geom: RobotGeometry) -> float:
    """Metres of wheel travel per encoder pulse: pi * D / (n * C_e)."""
    return math.pi * geom.wheel_diameter / (geom.gear_ratio * geom.encoder_resolution)


def wheel_displacements(ticks: EncoderTicks, geom: RobotGeometry) -> tuple[float, float]:
    """Convert encoder pulse counts to (left, right) wheel displacements."""
    c_m = conversion_factor(geom)
    return c_m * ticks.left, c_m * ticks.right


def motion_increment(ds_left: float, ds_right: float, geom: RobotGeometry) -> MotionIncrement:
    """Combine wheel displacements into a centre motion increment."""
    return MotionIncrement.from_wheels(ds_left, ds_right, geom.wheel_base)


def _propagate(p: Pose, ds: float, dtheta: float) -> Pose:
    # Endpoint-angle update: the chord is taken at the post-step heading.
    heading = p.theta + dtheta
    return Pose(p.x + ds * math.cos(heading), p.y + ds * math.sin(heading), heading)


def dead_reckon_step(p: Pose, m: MotionIncrement) -> Pose:
    """Propagate a pose by one noiseless odometry increment."""
    return _propagate(p, m.ds, m.dtheta)


def state_transition(p: Pose, m: MotionIncrement, w: tuple[float, float]) -> Pose:
    """Noisy process model: the increment is perturbed additively by ``w``.

    With ``w == (0, 0)`` the result equals :func:`dead_reckon_step` exactly.
    """
    return _propagate(p, m.ds + w[0], m.dtheta + w[1])


def measurement(p: Pose, v: tuple[float, float, float]) -> np.ndarray:
    """Identity pose observation with additive noise; theta wrapped."""
    return np.array([p.x + v[0], p.y + v[1], wrap_angle(p.theta + v[2])])


def process_jacobians(p: Pose, m: MotionIncrement) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the process model at ``(p, m)`` with zero noise.

    Returns ``(A, W)`` where ``A`` (3x3) differentiates with respect to the
    state and ``W`` (3x2) with respect to the ``(ds, dtheta)`` noise terms.
    """
    heading = p.theta + m.dtheta
    sin_h = math.sin(heading)
    cos_h = math.cos(heading)
    a = np.array(
        [
            [1.0, 0.0, -m.ds * sin_h],
            [0.0, 1.0, m.ds * cos_h],
            [0.0, 0.0, 1.0],
        ]
    )
    w = np.array(
        [
            [cos_h, -m.ds * sin_h],
            [sin_h, m.ds * cos_h],
            [0.0, 1.0],
        ]
    )
    return a, w


def measurement_jacobians(p: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians (H, V) of the identity measurement model: both identity."""
    return np.eye(3), np.eye(3)
