"""Run configuration: flat key-value files plus trajectory scripts.

Config files use section-prefixed keys, one per line::

    geometry.wheel_diameter = 0.05
    noise.sigma_dtheta = 1 deg
    trajectory.path = round_path.traj

Angles accept a ``deg`` or ``rad`` suffix and are stored in radians.
Relative file references are resolved against the config file's directory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adaptation import AdaptationConfig, AdaptationMode
from .errors import ConfigError
from .robot import RobotGeometry
from .simulate import Arc, Segment, SimConfig, SimNoiseConfig, Straight, TrajectorySpec

_KNOWN_KEYS = {
    "geometry.wheel_diameter",
    "geometry.wheel_base",
    "geometry.gear_ratio",
    "geometry.encoder_resolution",
    "trajectory.path",
    "noise.sigma_ds",
    "noise.sigma_dtheta",
    "noise.r_x",
    "noise.r_y",
    "noise.r_theta",
    "adaptation.mode",
    "adaptation.window",
    "adaptation.r_floor",
    "filter.r_scale",
    "fis.path",
    "run.runs",
    "run.seed",
}

_ANGLE_KEYS = {"noise.sigma_dtheta"}


def _parse_number(text: str, *, angle: bool, where: str) -> float:
    tokens = text.split()
    if len(tokens) == 2 and angle:
        value_text, unit = tokens
    elif len(tokens) == 1:
        value_text, unit = tokens[0], None
    else:
        raise ConfigError(f"{where}: cannot parse value {text!r}")
    try:
        value = float(value_text)
    except ValueError:
        raise ConfigError(f"{where}: invalid number {value_text!r}") from None
    if unit == "deg":
        return math.radians(value)
    if unit in (None, "rad"):
        return value
    raise ConfigError(f"{where}: unknown unit {unit!r}")


def _read_flat_file(path: Path) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = (value.strip(), lineno)
    return entries


def load_trajectory(path: str | Path) -> TrajectorySpec:
    """Parse a trajectory script: a ``step`` size plus segment lines.

    Segment lines are ``straight <length>`` or ``arc <radius> <sweep>``
    where sweep takes an optional ``deg`` suffix.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trajectory file not found: {path}")
    step_ds: float | None = None
    segments: list[Segment] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        where = f"{path}:{lineno}"
        try:
            if tokens[0] == "step" and len(tokens) == 2:
                step_ds = float(tokens[1])
            elif tokens[0] == "straight" and len(tokens) == 2:
                segments.append(Straight(length=float(tokens[1])))
            elif tokens[0] == "arc" and len(tokens) in (3, 4):
                sweep = _parse_number(" ".join(tokens[2:]), angle=True, where=where)
                segments.append(Arc(radius=float(tokens[1]), sweep=sweep))
            else:
                raise ConfigError(f"{where}: unknown directive {raw!r}")
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if step_ds is None:
        raise ConfigError(f"{path}: missing 'step <ds>' directive")
    try:
        return TrajectorySpec(segments=tuple(segments), step_ds=step_ds)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a simulation config file."""

    geometry: RobotGeometry
    trajectory: TrajectorySpec
    noise: SimNoiseConfig
    adaptation: AdaptationConfig
    fis_path: Path
    runs: int
    seed: int
    r_scale: float

    def sim_config(self) -> SimConfig:
        return SimConfig(
            geometry=self.geometry,
            noise=self.noise,
            adaptation=self.adaptation,
            r_scale=self.r_scale,
        )

    def echo(self) -> dict:
        """Plain-data snapshot of the resolved configuration."""
        return {
            "geometry": {
                "wheel_diameter": self.geometry.wheel_diameter,
                "wheel_base": self.geometry.wheel_base,
                "gear_ratio": self.geometry.gear_ratio,
                "encoder_resolution": self.geometry.encoder_resolution,
            },
            "noise": {
                "sigma_ds": self.noise.sigma_ds,
                "sigma_dtheta": self.noise.sigma_dtheta,
                "meas_r_diag": [float(v) for v in np.diag(self.noise.meas_R)],
            },
            "adaptation": {
                "mode": self.adaptation.mode.value,
                "window": self.adaptation.window,
                "r_floor": self.adaptation.r_floor,
            },
            "filter": {"r_scale": self.r_scale},
            "fis_path": str(self.fis_path),
            "runs": self.runs,
            "seed": self.seed,
        }


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a config file, rejecting unknown keys by name."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    entries = _read_flat_file(path)
    for key, (_, lineno) in entries.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")

    def require(key: str) -> tuple[str, int]:
        if key not in entries:
            raise ConfigError(f"{path}: missing required key {key!r}")
        return entries[key]

    def number(key: str) -> float:
        value, lineno = require(key)
        return _parse_number(value, angle=key in _ANGLE_KEYS, where=f"{path}:{lineno}")

    def integer(key: str, default: int | None = None) -> int:
        if key not in entries and default is not None:
            return default
        value, lineno = require(key)
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: invalid integer {value!r}") from None

    def optional_number(key: str, default: float) -> float:
        if key not in entries:
            return default
        value, lineno = entries[key]
        return _parse_number(value, angle=key in _ANGLE_KEYS, where=f"{path}:{lineno}")

    try:
        geometry = RobotGeometry(
            wheel_diameter=number("geometry.wheel_diameter"),
            wheel_base=number("geometry.wheel_base"),
            gear_ratio=number("geometry.gear_ratio"),
            encoder_resolution=number("geometry.encoder_resolution"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: geometry: {exc}") from None

    traj_text, _ = require("trajectory.path")
    traj_path = (path.parent / traj_text).resolve()
    trajectory = load_trajectory(traj_path)

    try:
        noise = SimNoiseConfig(
            sigma_ds=number("noise.sigma_ds"),
            sigma_dtheta=number("noise.sigma_dtheta"),
            meas_R=np.diag([number("noise.r_x"), number("noise.r_y"), number("noise.r_theta")]),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: noise: {exc}") from None

    mode_text = entries.get("adaptation.mode", ("r", 0))[0]
    try:
        mode = AdaptationMode(mode_text)
    except ValueError:
        raise ConfigError(
            f"{path}: adaptation.mode must be 'r' or 'q', got {mode_text!r}"
        ) from None
    try:
        adaptation = AdaptationConfig(
            mode=mode,
            window=integer("adaptation.window", default=16),
            r_floor=optional_number("adaptation.r_floor", 1e-6),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: adaptation: {exc}") from None

    fis_text, _ = require("fis.path")
    fis_path = (path.parent / fis_text).resolve()
    if not fis_path.is_file():
        raise ConfigError(f"{path}: fis.path does not exist: {fis_path}")

    r_scale = optional_number("filter.r_scale", 1.0)
    if r_scale <= 0.0:
        raise ConfigError(f"{path}: filter.r_scale must be > 0, got {r_scale!r}")

    return RunConfig(
        geometry=geometry,
        trajectory=trajectory,
        noise=noise,
        adaptation=adaptation,
        fis_path=fis_path,
        runs=integer("run.runs", default=100),
        seed=integer("run.seed", default=0),
        r_scale=r_scale,
    )
