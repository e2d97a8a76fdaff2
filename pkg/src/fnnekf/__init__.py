"""Adaptive extended Kalman filtering for differential-drive localization.

The package pairs a standard three-state EKF with an online noise tuner: a
windowed covariance-matching signal feeds a three-rule fuzzy system whose
membership parameters can themselves be fitted by gradient descent.  A
seeded Monte Carlo harness compares the fixed-noise and adaptive filters on
scripted trajectories.
"""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file (configs, parameter sets)."""
    path = Path(str(resources.files("fnnekf").joinpath("fixtures", name)))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path
