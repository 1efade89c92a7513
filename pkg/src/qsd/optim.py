"""Parameter-shift gradients and Adam."""

from dataclasses import dataclass

import numpy as np

SHIFT = np.pi / 2


class EvaluationError(ArithmeticError):
    pass


def shifted_parameters(thetas):
    """Rows ``theta + pi/2 e_i`` and ``theta - pi/2 e_i`` interleaved: ``2N x N``."""
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    out = np.repeat(thetas[None, :], 2 * n, axis=0)
    idx = np.arange(n)
    out[2 * idx, idx] += SHIFT
    out[2 * idx + 1, idx] -= SHIFT
    return out


def gradient_from_shifted(costs):
    costs = np.asarray(costs, dtype=float)
    if not np.all(np.isfinite(costs)):
        raise EvaluationError("non-finite cost in parameter-shift evaluation")
    return 0.5 * (costs[0::2] - costs[1::2])


def parameter_shift_gradient(cost_at, thetas):
    """Gradient of ``cost_at`` by the +-pi/2 shift rule (``2N`` evaluations)."""
    rows = shifted_parameters(thetas)
    return gradient_from_shifted([cost_at(r) for r in rows])


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, n, **hyper):
        return cls(np.zeros(n), np.zeros(n), **hyper)

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam decay rates must lie in [0, 1)")


def adam_step(state, thetas, grad):
    """One bias-corrected Adam update; returns a new state and new parameters."""
    thetas = np.asarray(thetas, dtype=float)
    g = np.asarray(grad, dtype=float)
    if g.shape != thetas.shape or state.m.shape != thetas.shape:
        raise ValueError("gradient, moments and parameters must have the same shape")
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * g
    v = state.beta2 * state.v + (1 - state.beta2) * (g * g)
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new = thetas - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return (
        AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.epsilon),
        new,
    )
