"""Uhlmann fidelity and the first-order noise model for the input families.

The model tracks how repeated single-qubit depolarizing on both data qubits
raises the overlap between the a and b states.  :func:`model_check` turns
that overlap (after three channel applications, one per entangling gate on
each data qubit) into a predicted minimal loss.
"""

import enum

import numpy as np

from .discrimination import state_a, state_b
from .engine import DensityMatrix, InvariantError, pure_state
from .noise import apply_channel, depolarizing_1q

NEGATIVE_LIMIT = -1e-8
MODEL_DEPTH = 3


class FidelityKind(enum.Enum):
    A_NOISYA = "a_noisya"
    B_NOISYB = "b_noisyb"
    A_NOISYB = "a_noisyb"
    NOISYA_NOISYB = "noisya_noisyb"


def _clean_spectrum(w):
    """Clamp negatives to zero and drop eigenvalues below the numerical rank
    tolerance; ``sqrt`` would otherwise turn 1e-16 roundoff into 1e-8."""
    if w[0] < NEGATIVE_LIMIT:
        raise InvariantError(f"eigenvalue {w[0]:.3e} is too negative for a density matrix")
    tol = len(w) * np.finfo(float).eps * max(abs(w[-1]), abs(w[0]))
    return np.where(w <= tol, 0.0, w)


def _psd_sqrt(m):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(_clean_spectrum(w))) @ v.conj().T


def uhlmann_fidelity(rho, sigma):
    """``(Tr sqrt(sqrt(sigma) rho sqrt(sigma)))**2``."""
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    s = sigma.data if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch {r.shape} vs {s.shape}")
    root = _psd_sqrt(s)
    inner = root @ r @ root
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(_clean_spectrum(w))) ** 2)


def noisy_state(psi, p, n):
    """Apply the 1-qubit depolarizing channel to both qubits, ``n`` times."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rho = psi if isinstance(psi, DensityMatrix) else pure_state(psi)
    channel = depolarizing_1q(p)
    for _ in range(n):
        rho = apply_channel(rho, channel, (0,))
        rho = apply_channel(rho, channel, (1,))
    return rho


def expansion(kind, mu_a, p, n):
    """First-order-in-``p`` fidelity for ``n`` channel applications."""
    kind = FidelityKind(kind)
    if kind is FidelityKind.A_NOISYA:
        return 1.0 - n * p
    if kind is FidelityKind.B_NOISYB:
        return 1.0 - 1.5 * n * p
    base = 0.5 * mu_a**2
    if kind is FidelityKind.A_NOISYB:
        return base + 0.5 * n * p * (1.0 - 2.0 * mu_a**2)
    slope = 1.0 + mu_a / np.sqrt(2.0) - 2.0 * mu_a**2 + np.sqrt(1.0 - 0.5 * mu_a**2)
    return base + n * p * slope


def numeric(kind, mu_a, p, n, sign=1):
    """Exact fidelity for the same quantity, with ``a`` fixed at ``mu_a``."""
    kind = FidelityKind(kind)
    a, b = state_a(mu_a), state_b(sign)
    if kind is FidelityKind.A_NOISYA:
        return uhlmann_fidelity(pure_state(a), noisy_state(a, p, n))
    if kind is FidelityKind.B_NOISYB:
        return uhlmann_fidelity(pure_state(b), noisy_state(b, p, n))
    if kind is FidelityKind.A_NOISYB:
        return uhlmann_fidelity(pure_state(a), noisy_state(b, p, n))
    return uhlmann_fidelity(noisy_state(a, p, n), noisy_state(b, p, n))


def model_check(mu_a, p):
    """Predicted minimal loss: the noisy-a / noisy-b overlap after three channels."""
    return expansion(FidelityKind.NOISYA_NOISYB, mu_a, p, MODEL_DEPTH)


def fidelity_table(mu_values=(0.25, 0.5, 0.75), p_values=(0.001, 0.01, 0.1), n_values=range(4)):
    """Rows comparing exact and first-order fidelities over a grid."""
    rows = []
    for kind in FidelityKind:
        for mu in mu_values:
            for p in p_values:
                for n in n_values:
                    num = numeric(kind, mu, p, n)
                    exp = expansion(kind, mu, p, n)
                    rows.append(
                        {
                            "kind": kind.value,
                            "mu_a": mu,
                            "p": p,
                            "n": n,
                            "numeric": num,
                            "expansion": exp,
                            "abs_diff": abs(num - exp),
                        }
                    )
    return rows
