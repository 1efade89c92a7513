"""Depolarizing Kraus channels."""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .engine import I2, X, Y, Z, DensityMatrix, embed_operator

ONE_QUBIT_RATIO = 0.8


class KrausChannel:
    """CPTP map given by its Kraus operators on 1 or 2 qubits."""

    def __init__(self, operators, probability, arity):
        self.operators = tuple(np.asarray(k, dtype=complex) for k in operators)
        self.probability = float(probability)
        self.arity = int(arity)
        d = 2**self.arity
        for k in self.operators:
            if k.shape != (d, d):
                raise ValueError(f"Kraus operator of shape {k.shape} on {arity} qubit(s)")

    def __len__(self):
        return len(self.operators)

    def completeness_error(self):
        s = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(s - np.eye(2**self.arity))))

    def __repr__(self):
        return f"KrausChannel(arity={self.arity}, p={self.probability}, n_ops={len(self)})"


def _check_p(p):
    if not 0.0 <= p <= 1.0 or not np.isfinite(p):
        raise ValueError(f"error probability {p} outside [0, 1]")


def depolarizing_1q(p):
    """Single-qubit depolarizing channel with weights ``1 - 3p/4`` and ``p/4`` x3."""
    _check_p(p)
    return KrausChannel(
        [np.sqrt(1 - 0.75 * p) * I2, np.sqrt(p / 4) * X, np.sqrt(p / 4) * Y, np.sqrt(p / 4) * Z],
        p,
        1,
    )


def depolarizing_2q(p):
    """Two-qubit channel built from all 16 tensor products of the 1-qubit operators."""
    one = depolarizing_1q(p).operators
    return KrausChannel([np.kron(a, b) for a, b in product(one, one)], p, 2)


def apply_channel(rho, channel, targets):
    """``sum_k E_k rho E_k^dagger`` with the channel acting on ``targets``."""
    targets = tuple(targets)
    if len(targets) != channel.arity:
        raise ValueError(f"{channel.arity}-qubit channel given targets {targets}")
    n = rho.n_qubits
    out = np.zeros_like(rho.data)
    for k in channel.operators:
        e = embed_operator(k, targets, n)
        out += e @ rho.data @ e.conj().T
    return DensityMatrix(out)


@dataclass(frozen=True)
class NoiseConfig:
    """Gate-noise level.  ``p_1q`` is always derived as ``0.8 * p_2q``."""

    p_2q: float = 0.0

    def __post_init__(self):
        _check_p(self.p_2q)

    @property
    def p_1q(self):
        return ONE_QUBIT_RATIO * self.p_2q

    @property
    def noiseless(self):
        return self.p_2q == 0.0
