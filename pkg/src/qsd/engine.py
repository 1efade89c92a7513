"""Dense density-matrix states and gates.

This is the reference path: every gate is lifted to the full register by
explicit tensor embedding, so it is easy to audit and is used to check the
batched interpreter in :mod:`qsd.kernels`.

Conventions: qubit 0 is the most significant bit of a basis index, and
``R_k(theta) = exp(-i theta sigma_k / 2)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

ATOL = 1e-10
ZERO_BRANCH = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"X": X, "Y": Y, "Z": Z}

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT",)


class NormalizationError(ValueError):
    pass


class InvariantError(ValueError):
    pass


class ZeroBranch(Exception):
    """Raised by :func:`project` when the requested outcome is impossible."""

    def __init__(self, probability):
        super().__init__(f"outcome probability {probability:.3e} below {ZERO_BRANCH}")
        self.probability = probability


def num_qubits(dim):
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class DensityMatrix:
    """Immutable ``2**n x 2**n`` density matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        num_qubits(data.shape[0])
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def n_qubits(self):
        return num_qubits(self.dim)

    def trace(self):
        return float(np.real(np.trace(self.data)))

    def purity(self):
        return float(np.real(np.trace(self.data @ self.data)))

    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))

    def check(self, atol=ATOL):
        """Raise :class:`InvariantError` unless Hermitian, trace one and PSD."""
        herm = np.max(np.abs(self.data - self.data.conj().T))
        if herm > atol:
            raise InvariantError(f"not Hermitian (max deviation {herm:.3e})")
        if abs(np.trace(self.data) - 1) > atol:
            raise InvariantError(f"trace {self.trace():.12f} != 1")
        lo = self.eigenvalues()[0]
        if lo < -atol:
            raise InvariantError(f"negative eigenvalue {lo:.3e}")
        return self

    @classmethod
    def maximally_mixed(cls, n_qubits):
        d = 2**n_qubits
        return cls(np.eye(d) / d)

    @classmethod
    def basis(cls, bits):
        """Projector onto the computational basis state given as a bit string."""
        idx = int(bits, 2)
        d = 2 ** len(bits)
        data = np.zeros((d, d), dtype=complex)
        data[idx, idx] = 1.0
        return cls(data)


def tensor(*states):
    out = np.ones((1, 1), dtype=complex)
    for s in states:
        out = np.kron(out, s.data if isinstance(s, DensityMatrix) else s)
    return DensityMatrix(out)


def pure_state(amplitudes):
    """Return ``|psi><psi|`` for a unit-norm amplitude vector."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    num_qubits(psi.shape[0])
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise NormalizationError(f"state vector has norm {norm:.12f}")
    return DensityMatrix(np.outer(psi, psi.conj()))


def rotation(kind, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * I2 - 1j * s * PAULIS[kind[1]]


@dataclass(frozen=True)
class GateOp:
    """A gate bound to qubits.

    Rotations take one target; CNOT takes ``(control, target)``.  When
    ``param_index`` is set, the angle is read from a parameter vector by
    :meth:`bind`.
    """

    kind: str
    targets: tuple
    angle: float = 0.0
    param_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        want = 2 if self.kind == "CNOT" else 1
        if len(targets) != want:
            raise ValueError(f"{self.kind} needs {want} target(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"repeated target in {targets}")
        object.__setattr__(self, "targets", targets)

    @property
    def is_rotation(self):
        return self.kind in ROTATIONS

    def bind(self, thetas):
        if self.param_index is None:
            return self
        return GateOp(self.kind, self.targets, float(thetas[self.param_index]), self.param_index)

    def matrix(self):
        """The gate's unitary on its own targets (2x2 or 4x4)."""
        if self.kind == "CNOT":
            m = np.eye(4, dtype=complex)
            m[2:, 2:] = X
            return m
        return rotation(self.kind, self.angle)


def embed(gate, n_qubits):
    """Lift ``gate`` to the full ``n_qubits`` register (dense ``2**n`` matrix)."""
    for t in gate.targets:
        if not 0 <= t < n_qubits:
            raise IndexError(f"qubit {t} out of range for {n_qubits} qubits")
    if gate.kind == "CNOT":
        control, target = gate.targets
        p0 = np.diag([1, 0]).astype(complex)
        p1 = np.diag([0, 1]).astype(complex)
        off = [I2] * n_qubits
        on = [I2] * n_qubits
        off[control] = p0
        on[control] = p1
        on[target] = X
        return _kron_all(off) + _kron_all(on)
    factors = [I2] * n_qubits
    factors[gate.targets[0]] = gate.matrix()
    return _kron_all(factors)


def embed_operator(op, targets, n_qubits):
    """Lift a 1- or 2-qubit operator on ``targets`` to the full register."""
    targets = tuple(targets)
    for t in targets:
        if not 0 <= t < n_qubits:
            raise IndexError(f"qubit {t} out of range for {n_qubits} qubits")
    k = len(targets)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator shape {op.shape} does not act on {k} qubit(s)")
    # reorder axes so the operator acts on the chosen qubits
    d = 2**n_qubits
    rest = [q for q in range(n_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(rest)))
    order = list(targets) + rest
    t = full.reshape([2] * (2 * n_qubits))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n_qubits + i for i in inv])
    return t.reshape(d, d)


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def apply_unitary(rho, gate):
    """Return ``U rho U^dagger`` with ``gate`` lifted to the register."""
    u = embed(gate, rho.n_qubits)
    return DensityMatrix(u @ rho.data @ u.conj().T)


def projector(n_qubits, qubit, outcome):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    mask = 1 << (n_qubits - 1 - qubit)
    idx = np.arange(2**n_qubits)
    return ((idx & mask) != 0) == bool(outcome)


def outcome_probability(rho, qubit, outcome):
    """Probability of reading ``outcome`` on ``qubit``: ``Tr(P rho)``."""
    keep = projector(rho.n_qubits, qubit, outcome)
    return float(np.real(np.sum(np.diag(rho.data)[keep])))


def project(rho, qubit, outcome):
    """Measure ``qubit`` and post-select ``outcome``.

    Returns ``(probability, P rho P / probability)``.  Raises
    :class:`ZeroBranch` when the probability is below ``1e-12``.
    """
    keep = projector(rho.n_qubits, qubit, outcome)
    prob = float(np.real(np.sum(np.diag(rho.data)[keep])))
    if prob < ZERO_BRANCH:
        raise ZeroBranch(prob)
    mask = np.outer(keep, keep)
    return prob, DensityMatrix(np.where(mask, rho.data, 0.0) / prob)


def random_density_matrix(n_qubits, rng, rank=None):
    d = 2**n_qubits
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m))


def random_pure_state(n_qubits, rng):
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return v / np.linalg.norm(v)
