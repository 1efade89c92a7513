"""Input-state families, sampling, label map and the biased cost."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import DensityMatrix, pure_state

#: label assigned to each outcome string m0 m1
LABEL_MAP = {"00": "A", "01": "B", "10": "A", "11": "inconclusive"}
CLASSES = ("A", "B+", "B-")
CLASS_PROBABILITIES = (1 / 3, 1 / 3, 1 / 3)

RANDOM_LOSS = 2 / 3
OPTIMAL_LOSS_REF = 0.166
EQUAL_PROBABILITY_LOSS_REF = 0.635


@dataclass(frozen=True)
class StateFamilyParams:
    mu_a: float = 0.5
    sigma_a: float = 0.15

    def __post_init__(self):
        if not 0.0 < self.mu_a <= 1.0:
            raise ValueError(f"mu_a must lie in (0, 1], got {self.mu_a}")
        if not self.sigma_a >= 0.0:
            raise ValueError(f"sigma_a must be non-negative, got {self.sigma_a}")


@dataclass(frozen=True)
class CostParams:
    alpha_err: float = 40.0
    alpha_inc: float = 40.0

    def __post_init__(self):
        if not (self.alpha_err > 0 and self.alpha_inc > 0):
            raise ValueError("cost weights must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    cost: float
    p_err: float
    p_inc: float

    @property
    def loss(self):
        return self.p_err + self.p_inc

    @property
    def success(self):
        return 1.0 - self.loss

    def as_dict(self):
        return {"cost": self.cost, "p_err": self.p_err, "p_inc": self.p_inc, "loss": self.loss}


@dataclass(frozen=True)
class LabeledInput:
    rho: DensityMatrix
    label: str
    klass: str
    a_value: Optional[float] = None


def state_a(a):
    """Amplitudes ``(sqrt(1 - a^2), 0, a, 0)``."""
    return np.array([np.sqrt(1.0 - a * a), 0.0, a, 0.0])


def state_b(sign):
    """Amplitudes ``(0, +-1/sqrt(2), 1/sqrt(2), 0)``."""
    s = 1.0 if sign > 0 else -1.0
    return np.array([0.0, s, 1.0, 0.0]) / np.sqrt(2.0)


def sample_a(rng, params):
    """Gaussian ``a`` rejection-sampled into (0, 1]."""
    while True:
        a = rng.normal(params.mu_a, params.sigma_a)
        if 0.0 < a <= 1.0:
            return float(a)


def sample_input(rng, params):
    klass = CLASSES[rng.integers(3)]
    if klass == "A":
        a = sample_a(rng, params)
        return LabeledInput(pure_state(state_a(a)), "A", "A", a)
    return LabeledInput(pure_state(state_b(1 if klass == "B+" else -1)), "B", klass)


def sample_dataset(rng, params, size):
    return [sample_input(rng, params) for _ in range(size)]


def as_distribution(dist):
    """``(p00, p01, p10, p11)`` from a dict keyed by outcome string or a sequence."""
    if isinstance(dist, dict):
        return np.array([dist["00"], dist["01"], dist["10"], dist["11"]], dtype=float)
    return np.asarray(dist, dtype=float)


def classify_outcomes(dist, label):
    """Return ``(p_correct, p_err, p_inc)`` for a single input."""
    p00, p01, p10, p11 = as_distribution(dist)
    if label == "A":
        return p00 + p10, p01, p11
    if label == "B":
        return p01, p00 + p10, p11
    raise ValueError(f"label must be 'A' or 'B', got {label!r}")


def batch_cost(inputs, dists, cp):
    """Mean error and inconclusive probabilities over a batch, weighted by ``cp``."""
    if len(inputs) == 0:
        raise ValueError("empty batch")
    if len(inputs) != len(dists):
        raise ValueError(f"{len(inputs)} inputs but {len(dists)} distributions")
    err = inc = 0.0
    for item, dist in zip(inputs, dists):
        _, e, i = classify_outcomes(dist, item.label)
        err += e
        inc += i
    p_err, p_inc = err / len(inputs), inc / len(inputs)
    return CostBreakdown(cp.alpha_err * p_err + cp.alpha_inc * p_inc, p_err, p_inc)


def class_sums(inputs):
    """Per-class sums of input matrices in ``CLASSES`` order, and class counts."""
    sums = np.zeros((len(CLASSES), 4, 4), dtype=complex)
    counts = np.zeros(len(CLASSES), dtype=int)
    for item in inputs:
        k = CLASSES.index(item.klass)
        sums[k] += item.rho.data
        counts[k] += 1
    return sums, counts


def error_and_inconclusive(probs):
    """``(p_err, p_inc)`` from outcome probabilities of the class sums.

    ``probs[..., c, k]`` holds outcome ``k`` for the (already batch-normalized)
    sum of class ``c``; the pipeline is linear, so this equals the batch mean.
    """
    a, bp, bm = probs[..., 0, :], probs[..., 1, :], probs[..., 2, :]
    b = bp + bm
    p_err = a[..., 1] + b[..., 0] + b[..., 2]
    p_inc = a[..., 3] + b[..., 3]
    return p_err, p_inc
