"""Steepest-descent tuning of the fuzzy membership parameters.

Each training pattern is a (mismatch, target adjustment) pair.  The squared
error of the inferred adjustment is minimised by per-pattern gradient steps
over all twelve shape parameters.  Exact gradients are derived through the
inference pipeline, including the firing-level clamp (clamped logits
contribute zero gradient) and the mode rule for the maintain consequent
(only its centre receives gradient; its width is frozen).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DivergenceError
from .fuzzy import (
    ALPHA_CLIP,
    FIRING_EPS,
    PARAM_KEYS,
    FisParams,
    fire_rules,
    infer,
)

GradientRecord = dict[str, float]


@dataclass(frozen=True)
class TrainingSet:
    """Ordered (mismatch, target adjustment) pairs."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        inputs = np.atleast_1d(np.asarray(self.inputs, dtype=float))
        targets = np.atleast_1d(np.asarray(self.targets, dtype=float))
        if inputs.ndim != 1 or inputs.shape != targets.shape:
            raise ValueError("inputs and targets must be 1-D arrays of equal length")
        if inputs.size < 1:
            raise ValueError("training set must contain at least one pattern")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise ValueError("training data must be finite")
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.inputs.size)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 500
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0.0):
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


def pattern_error(z_k: float, target: float) -> float:
    """Half squared error of one pattern."""
    diff = z_k - target
    return 0.5 * diff * diff


def analytic_gradients(fis: FisParams, d_k: float, target: float) -> GradientRecord:
    """Exact partial derivatives of the pattern error for every parameter."""
    grads = {key: 0.0 for key in PARAM_KEYS}
    alpha = fire_rules(d_k, fis)
    total = alpha[0] + alpha[1] + alpha[2]

    if total < FIRING_EPS:
        # Degenerate fallback: output is the maintain centre outright.
        err = fis.consequent_maintain.c - target
        grads["c1"] = err
        return grads

    beta = (alpha[0] / total, alpha[1] / total, alpha[2] / total)

    def inverse_and_slope(a_level: float, params) -> tuple[float, float]:
        """Consequent inverse and d(inverse)/d(alpha); zero slope when clamped."""
        if params.is_degenerate:
            return params.b, 0.0
        clamped = min(max(a_level, ALPHA_CLIP), 1.0 - ALPHA_CLIP)
        value = params.b + math.log(clamped / (1.0 - clamped)) / params.a
        if a_level <= ALPHA_CLIP or a_level >= 1.0 - ALPHA_CLIP:
            return value, 0.0
        return value, 1.0 / (params.a * clamped * (1.0 - clamped))

    z1, dz1_dalpha = inverse_and_slope(alpha[0], fis.consequent_inc)
    z2 = fis.consequent_maintain.c
    z3, dz3_dalpha = inverse_and_slope(alpha[2], fis.consequent_dec)
    z = beta[0] * z1 + beta[1] * z2 + beta[2] * z3
    err = z - target

    # Consequent parameters act through their own rule output only.
    inc = fis.consequent_inc
    if not inc.is_degenerate:
        clamped1 = min(max(alpha[0], ALPHA_CLIP), 1.0 - ALPHA_CLIP)
        grads["a4"] = err * beta[0] * (-math.log(clamped1 / (1.0 - clamped1)) / inc.a**2)
    grads["b4"] = err * beta[0]
    dec = fis.consequent_dec
    if not dec.is_degenerate:
        clamped3 = min(max(alpha[2], ALPHA_CLIP), 1.0 - ALPHA_CLIP)
        grads["a3"] = err * beta[2] * (-math.log(clamped3 / (1.0 - clamped3)) / dec.a**2)
    grads["b3"] = err * beta[2]
    grads["c1"] = err * beta[1]
    grads["sigma1"] = 0.0

    # Antecedent parameters act through the firing levels: each alpha moves
    # every normalised weight, plus its own rule's output.
    dz_dalpha = (
        (z1 - z) / total + beta[0] * dz1_dalpha,
        (z2 - z) / total,
        (z3 - z) / total + beta[2] * dz3_dalpha,
    )

    neg = fis.antecedent_neg
    s1 = alpha[0] * (1.0 - alpha[0])
    grads["a2"] = err * dz_dalpha[0] * s1 * (d_k - neg.b)
    grads["b2"] = err * dz_dalpha[0] * (-neg.a * s1)

    zero = fis.antecedent_zero
    grads["c2"] = err * dz_dalpha[1] * alpha[1] * (d_k - zero.c) / zero.sigma**2
    grads["sigma2"] = err * dz_dalpha[1] * alpha[1] * (d_k - zero.c) ** 2 / zero.sigma**3

    pos = fis.antecedent_pos
    s3 = alpha[2] * (1.0 - alpha[2])
    grads["a1"] = err * dz_dalpha[2] * s3 * (d_k - pos.b)
    grads["b1"] = err * dz_dalpha[2] * (-pos.a * s3)
    return grads


def finite_diff_gradients(
    fis: FisParams, d_k: float, target: float, step: float = 1e-6
) -> GradientRecord:
    """Central-difference gradients of the pattern error (test oracle)."""
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step!r}")
    base = fis.to_mapping()
    grads: GradientRecord = {}
    for key in PARAM_KEYS:
        upper = dict(base)
        lower = dict(base)
        upper[key] = base[key] + step
        lower[key] = base[key] - step
        e_up = pattern_error(infer(d_k, FisParams.from_mapping(upper)), target)
        e_dn = pattern_error(infer(d_k, FisParams.from_mapping(lower)), target)
        grads[key] = (e_up - e_dn) / (2.0 * step)
    return grads


def sgd_step(fis: FisParams, grads: GradientRecord, eta: float) -> FisParams:
    """Move every parameter one step against its gradient.

    Width parameters are re-clamped by construction of the new FisParams.
    """
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta!r}")
    mapping = fis.to_mapping()
    updated = {key: mapping[key] - eta * grads.get(key, 0.0) for key in PARAM_KEYS}
    return FisParams.from_mapping(updated)


def mean_loss(fis: FisParams, data: TrainingSet) -> float:
    """Mean pattern error over the whole set."""
    total = 0.0
    for d_k, target in zip(data.inputs, data.targets):
        total += pattern_error(infer(float(d_k), fis), float(target))
    return total / len(data)


def train(
    fis: FisParams, data: TrainingSet, cfg: TrainConfig
) -> tuple[FisParams, list[float]]:
    """Per-pattern stochastic descent; returns the tuned parameters and the
    mean loss recorded after each epoch.

    Pattern order is reshuffled every epoch from a single seeded generator,
    so the whole trajectory is reproducible from ``cfg.shuffle_seed``.
    """
    rng = np.random.default_rng(cfg.shuffle_seed)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        for k in rng.permutation(len(data)):
            grads = analytic_gradients(fis, float(data.inputs[k]), float(data.targets[k]))
            fis = sgd_step(fis, grads, cfg.learning_rate)
        loss = mean_loss(fis, data)
        if not math.isfinite(loss):
            raise DivergenceError(f"training diverged at epoch {epoch + 1}")
        history.append(loss)
    return fis, history


@dataclass(frozen=True)
class RuleGains:
    """Shape of the synthetic target map used to manufacture training data.

    ``gain`` is the saturation magnitude, ``scale`` the mismatch range over
    which the response ramps up, and ``deadband`` an optional soft zone
    around zero in which the target stays near zero.
    """

    gain: float
    scale: float
    deadband: float = 0.0

    def __post_init__(self) -> None:
        if self.gain <= 0.0 or self.scale <= 0.0 or self.deadband < 0.0:
            raise ValueError("gain and scale must be > 0, deadband >= 0")

    def target(self, d: float) -> float:
        shaped = d
        if self.deadband > 0.0:
            shaped = d - self.deadband * math.tanh(d / self.deadband)
        return -self.gain * math.tanh(shaped / self.scale)


def generate_training_set(
    gains: RuleGains, grid, seed: int = 0, noise_std: float = 0.0
) -> TrainingSet:
    """Targets from an odd piecewise-smooth map: zero near zero mismatch,
    negative for large positive mismatch, positive for large negative.

    Optional Gaussian jitter on the targets is drawn from ``seed``.
    """
    inputs = np.atleast_1d(np.asarray(grid, dtype=float))
    if inputs.size == 0:
        raise ValueError("grid must not be empty")
    targets = np.array([gains.target(float(d)) for d in inputs])
    if noise_std > 0.0:
        targets = targets + np.random.default_rng(seed).normal(0.0, noise_std, inputs.size)
    return TrainingSet(inputs=inputs, targets=targets)


def load_training_csv(path: str | Path) -> TrainingSet:
    """Read ``d,delta_r`` rows into a training set."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["d", "delta_r"]:
            raise ValueError(f"{path}: expected header 'd,delta_r', got {header!r}")
        inputs: list[float] = []
        targets: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {row!r}")
            inputs.append(float(row[0]))
            targets.append(float(row[1]))
    return TrainingSet(inputs=np.array(inputs), targets=np.array(targets))


def save_training_csv(data: TrainingSet, path: str | Path) -> None:
    """Write a training set as ``d,delta_r`` rows."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["d", "delta_r"])
        for d_k, target in zip(data.inputs, data.targets):
            writer.writerow([repr(float(d_k)), repr(float(target))])
