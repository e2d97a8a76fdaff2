"""Three-rule fuzzy system mapping a covariance mismatch to a noise adjustment.

Rule base (one input, one output):

    1. mismatch ZERO     -> adjustment MAINTAIN
    2. mismatch POSITIVE -> adjustment DECREASE
    3. mismatch NEGATIVE -> adjustment INCREASE

Antecedents P and N are sigmoids, Z is a Gaussian; consequents D and I are
sigmoids, M is a Gaussian.  The crisp output is computed network-style: fire
the rules, normalise the firing levels, invert each monotone consequent at
its rule's firing level, and sum the weighted rule outputs.  The Gaussian
MAINTAIN consequent is not monotone, so its "inverse" is its mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DegenerateInputError

SIGMA_MIN = 1e-3
ALPHA_CLIP = 1e-9
FIRING_EPS = 1e-12

# Flat-file parameter keys, in write order.
PARAM_KEYS = ("a1", "b1", "a2", "b2", "a3", "b3", "a4", "b4", "c1", "sigma1", "c2", "sigma2")


@dataclass(frozen=True)
class SigmoidParams:
    """Slope ``a`` and centre ``b`` of 1 / (1 + exp(-a (x - b))).

    ``a == 0`` is permitted but degenerate: the membership is constant 0.5.
    """

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("sigmoid parameters must be finite")

    @property
    def is_degenerate(self) -> bool:
        return self.a == 0.0


@dataclass(frozen=True)
class GaussParams:
    """Centre ``c`` and width ``sigma`` of exp(-(x - c)^2 / (2 sigma^2)).

    ``sigma`` is clamped up to ``SIGMA_MIN`` at construction.
    """

    c: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and math.isfinite(self.sigma)):
            raise ValueError("gaussian parameters must be finite")
        object.__setattr__(self, "sigma", max(self.sigma, SIGMA_MIN))


@dataclass(frozen=True)
class FisParams:
    """All membership-function parameters of the three-rule system."""

    antecedent_pos: SigmoidParams
    antecedent_neg: SigmoidParams
    antecedent_zero: GaussParams
    consequent_dec: SigmoidParams
    consequent_inc: SigmoidParams
    consequent_maintain: GaussParams

    def to_mapping(self) -> dict[str, float]:
        """Flatten to the a1..sigma2 key scheme used by parameter files."""
        return {
            "a1": self.antecedent_pos.a,
            "b1": self.antecedent_pos.b,
            "a2": self.antecedent_neg.a,
            "b2": self.antecedent_neg.b,
            "a3": self.consequent_dec.a,
            "b3": self.consequent_dec.b,
            "a4": self.consequent_inc.a,
            "b4": self.consequent_inc.b,
            "c1": self.consequent_maintain.c,
            "sigma1": self.consequent_maintain.sigma,
            "c2": self.antecedent_zero.c,
            "sigma2": self.antecedent_zero.sigma,
        }

    @classmethod
    def from_mapping(cls, values: dict[str, float]) -> "FisParams":
        missing = [k for k in PARAM_KEYS if k not in values]
        if missing:
            raise ValueError(f"missing fuzzy parameters: {', '.join(missing)}")
        extra = [k for k in values if k not in PARAM_KEYS]
        if extra:
            raise ValueError(f"unknown fuzzy parameters: {', '.join(sorted(extra))}")
        return cls(
            antecedent_pos=SigmoidParams(values["a1"], values["b1"]),
            antecedent_neg=SigmoidParams(values["a2"], values["b2"]),
            antecedent_zero=GaussParams(values["c2"], values["sigma2"]),
            consequent_dec=SigmoidParams(values["a3"], values["b3"]),
            consequent_inc=SigmoidParams(values["a4"], values["b4"]),
            consequent_maintain=GaussParams(values["c1"], values["sigma1"]),
        )


def sigmoid_mf(x: float, p: SigmoidParams) -> float:
    """Sigmoid membership of ``x``; monotone in x with the sign of ``a``."""
    t = p.a * (x - p.b)
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def gauss_mf(x: float, p: GaussParams) -> float:
    """Gaussian membership of ``x``; peaks at 1 when x equals the centre."""
    u = (x - p.c) / p.sigma
    return math.exp(-0.5 * u * u)


def fire_rules(x: float, fis: FisParams) -> tuple[float, float, float]:
    """Firing levels (alpha1, alpha2, alpha3) = (N(x), Z(x), P(x))."""
    return (
        sigmoid_mf(x, fis.antecedent_neg),
        gauss_mf(x, fis.antecedent_zero),
        sigmoid_mf(x, fis.antecedent_pos),
    )


def normalize_firing(alpha: tuple[float, float, float]) -> tuple[float, float, float]:
    """Normalise firing levels to sum to 1.

    When every rule is essentially silent (sum below ``FIRING_EPS``) the
    maintain rule wins outright: returns (0, 1, 0).
    """
    if any(a < 0.0 for a in alpha):
        raise ValueError(f"firing levels must be non-negative, got {alpha!r}")
    total = alpha[0] + alpha[1] + alpha[2]
    if total < FIRING_EPS:
        return (0.0, 1.0, 0.0)
    return (alpha[0] / total, alpha[1] / total, alpha[2] / total)


def _sigmoid_inverse(alpha: float, p: SigmoidParams) -> float:
    """Crisp value at which the sigmoid equals ``alpha``.

    The firing level is clamped to [ALPHA_CLIP, 1 - ALPHA_CLIP] so the
    logit stays finite.  A degenerate (a == 0) consequent has no slope to
    invert; its centre is returned, mirroring the mode rule for Gaussians.
    """
    if p.is_degenerate:
        return p.b
    clamped = min(max(alpha, ALPHA_CLIP), 1.0 - ALPHA_CLIP)
    return p.b + math.log(clamped / (1.0 - clamped)) / p.a


def rule_outputs(alpha: tuple[float, float, float], fis: FisParams) -> tuple[float, float, float]:
    """Crisp output of each rule at its firing level.

    Rule 3 (NEGATIVE -> INCREASE) inverts the increase consequent at alpha1,
    rule 1 (ZERO -> MAINTAIN) returns the maintain mode, and rule 2
    (POSITIVE -> DECREASE) inverts the decrease consequent at alpha3.
    """
    return (
        _sigmoid_inverse(alpha[0], fis.consequent_inc),
        fis.consequent_maintain.c,
        _sigmoid_inverse(alpha[2], fis.consequent_dec),
    )


def aggregate(beta: tuple[float, float, float], z: tuple[float, float, float]) -> float:
    """Weighted sum of rule outputs; a convex combination when sum(beta) = 1."""
    return beta[0] * z[0] + beta[1] * z[1] + beta[2] * z[2]


def infer(x: float, fis: FisParams) -> float:
    """Crisp adjustment for mismatch ``x`` through the full rule pipeline."""
    alpha = fire_rules(x, fis)
    return aggregate(normalize_firing(alpha), rule_outputs(alpha, fis))


def centroid_defuzzify(domain, mu) -> float:
    """Centroid of a sampled membership curve: sum(x * mu) / sum(mu).

    Standalone utility for comparing against the network-style output; it is
    not used by the runtime adaptation path.
    """
    xs = list(domain)
    ms = list(mu)
    if not xs:
        raise ValueError("domain must not be empty")
    if len(xs) != len(ms):
        raise ValueError(f"domain and membership lengths differ: {len(xs)} vs {len(ms)}")
    total = float(sum(ms))
    if total <= 0.0:
        raise DegenerateInputError("membership values sum to zero")
    return float(sum(x * m for x, m in zip(xs, ms)) / total)


def load_fis_params(path: str | Path) -> FisParams:
    """Read a flat ``key = value`` parameter file.

    Emits a warning when a width parameter had to be clamped up to
    ``SIGMA_MIN`` or a consequent slope is zero (constant 0.5 membership).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"fuzzy parameter file not found: {path}")
    values: dict[str, float] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        if key not in PARAM_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown parameter {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate parameter {key!r}")
        try:
            values[key] = float(text.strip())
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: invalid number {text.strip()!r}") from None
    try:
        fis = FisParams.from_mapping(values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for key in ("sigma1", "sigma2"):
        if values[key] < SIGMA_MIN:
            warnings.warn(
                f"{path}: {key}={values[key]!r} clamped to {SIGMA_MIN}", stacklevel=2
            )
    for key, label in (("a3", "decrease"), ("a4", "increase")):
        if values[key] == 0.0:
            warnings.warn(
                f"{path}: {key}=0 makes the {label} membership a constant 0.5",
                stacklevel=2,
            )
    return fis


def save_fis_params(fis: FisParams, path: str | Path) -> None:
    """Write parameters in the flat file format, one per line."""
    mapping = fis.to_mapping()
    lines = [f"{key} = {mapping[key]!r}" for key in PARAM_KEYS]
    Path(path).write_text("\n".join(lines) + "\n")
