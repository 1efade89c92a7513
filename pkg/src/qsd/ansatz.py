"""Discriminator circuits and the measure-and-branch pipeline.

Register layout: qubit 0 is measured mid-circuit, qubit 1 is measured at the
end, qubits 2 and 3 hold the two-qubit input state.  Parameter slots are
0-based, so slot ``k`` is the figure's ``theta_{k+1}``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import (
    DensityMatrix,
    GateOp,
    ZeroBranch,
    apply_unitary,
    outcome_probability,
    project,
    tensor,
)
from .noise import NoiseConfig, apply_channel, depolarizing_1q, depolarizing_2q

N_QUBITS = 4
OUTCOMES = ("00", "01", "10", "11")


class CircuitKind(enum.Enum):
    LONG = "long"
    SHORT = "short"

    @property
    def n_params(self):
        return 30 if self is CircuitKind.LONG else 12

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class ParameterCountError(ValueError):
    pass


def _check_len(kind, thetas):
    n = len(thetas)
    if n != kind.n_params:
        raise ParameterCountError(f"{kind.name} circuit takes {kind.n_params} parameters, got {n}")


def _xzx(qubit, first_slot):
    return [
        GateOp("RX", (qubit,), param_index=first_slot),
        GateOp("RZ", (qubit,), param_index=first_slot + 1),
        GateOp("RX", (qubit,), param_index=first_slot + 2),
    ]


def _xyz(qubit, first_slot):
    return [
        GateOp("RX", (qubit,), param_index=first_slot),
        GateOp("RY", (qubit,), param_index=first_slot + 1),
        GateOp("RZ", (qubit,), param_index=first_slot + 2),
    ]


def _cnot(control, target):
    return GateOp("CNOT", (control, target))


def build_u(kind, thetas=None):
    """Gate list of the U block.  Angles are bound when ``thetas`` is given."""
    kind = CircuitKind.parse(kind)
    if kind is CircuitKind.SHORT:
        gates = [_cnot(3, 0), _cnot(3, 1), _cnot(2, 0), _cnot(2, 1)]
        gates += _xzx(0, 0) + _xzx(1, 3)
    else:
        gates = []
        for q in range(4):
            gates += _xyz(q, 3 * q)
        gates += [_cnot(0, 1), _cnot(0, 2), _cnot(0, 3), _cnot(3, 0)]
    return _bind(kind, gates, thetas)


def build_v(kind, which, thetas=None):
    """Gate list of V1 (``which=1``) or V2 (``which=2``) on qubits 1..3."""
    kind = CircuitKind.parse(kind)
    if which not in (1, 2):
        raise ValueError(f"which must be 1 or 2, got {which}")
    if kind is CircuitKind.SHORT:
        gates = [_cnot(3, 1), _cnot(2, 1)] + _xzx(1, 6 if which == 1 else 9)
    else:
        base = 12 if which == 1 else 21
        gates = _xyz(1, base) + _xyz(2, base + 3) + _xyz(3, base + 6)
        gates += [_cnot(1, 2), _cnot(1, 3), _cnot(3, 1)]
    return _bind(kind, gates, thetas)


def _bind(kind, gates, thetas):
    if thetas is None:
        return gates
    _check_len(kind, thetas)
    return [g.bind(thetas) for g in gates]


def apply_noisy_gate(rho, gate, noise):
    """Apply ``gate`` followed by its depolarizing channel."""
    rho = apply_unitary(rho, gate)
    if noise.noiseless:
        return rho
    if gate.kind == "CNOT":
        return apply_channel(rho, depolarizing_2q(noise.p_2q), gate.targets)
    return apply_channel(rho, depolarizing_1q(noise.p_1q), gate.targets)


def run_discriminator(rho_in, kind, thetas, noise=NoiseConfig()):
    """Outcome distribution ``{"00": p00, ...}`` of the full noisy pipeline.

    Reference implementation on dense 16x16 matrices, one input at a time.
    Outcome strings are ``m0 m1``: mid-circuit bit of qubit 0, final bit of
    qubit 1.
    """
    kind = CircuitKind.parse(kind)
    _check_len(kind, thetas)
    if not isinstance(rho_in, DensityMatrix):
        rho_in = DensityMatrix(rho_in)
    if rho_in.n_qubits != 2:
        raise ValueError("input must be a two-qubit state")
    rho_in.check(1e-9)
    zero = DensityMatrix.basis("0")
    rho = tensor(zero, zero, rho_in)
    for gate in build_u(kind, thetas):
        rho = apply_noisy_gate(rho, gate, noise)
    dist = {}
    for m0, which in ((0, 2), (1, 1)):
        try:
            weight, branch = project(rho, 0, m0)
        except ZeroBranch:
            dist[f"{m0}0"] = dist[f"{m0}1"] = 0.0
            continue
        for gate in build_v(kind, which, thetas):
            branch = apply_noisy_gate(branch, gate, noise)
        for m1 in (0, 1):
            dist[f"{m0}{m1}"] = weight * outcome_probability(branch, 1, m1)
    return {k: dist[k] for k in OUTCOMES}


def compile_program(gates, noise, qubit_offset=0):
    """Lower a gate list to the interpreter format of :mod:`qsd.kernels`.

    Every rotation is followed by a 1-qubit channel at ``p_1q`` and every
    CNOT by the 2-qubit channel at ``p_2q``.  ``qubit_offset`` is subtracted
    from each target so a block can run on a smaller register.
    """
    rows, probs = [], []
    opcode = {"RX": kernels.OP_RX, "RY": kernels.OP_RY, "RZ": kernels.OP_RZ}
    for g in gates:
        t = [q - qubit_offset for q in g.targets]
        if g.kind == "CNOT":
            rows.append((kernels.OP_CNOT, t[0], t[1], 0))
            probs.append(0.0)
            if not noise.noiseless:
                rows.append((kernels.OP_DEP2, t[0], t[1], 0))
                probs.append(noise.p_2q)
        else:
            if g.param_index is None:
                raise ValueError("compiled programs need parametrized rotations")
            rows.append((opcode[g.kind], t[0], 0, g.param_index))
            probs.append(0.0)
            if not noise.noiseless:
                rows.append((kernels.OP_DEP1, t[0], 0, 0))
                probs.append(noise.p_1q)
    return np.array(rows, dtype=np.int64).reshape(-1, 4), np.array(probs, dtype=float)


@dataclass(frozen=True)
class Discriminator:
    """Batched evaluator of the pipeline for many inputs and parameter sets.

    Unlike :func:`run_discriminator`, the branches are carried unnormalized
    (the ``q0 = m`` diagonal blocks of the register), which makes the output
    linear in the input matrix.  Inputs may therefore be sums of states.
    """

    kind: CircuitKind
    noise: NoiseConfig = NoiseConfig()

    def __post_init__(self):
        object.__setattr__(self, "kind", CircuitKind.parse(self.kind))
        object.__setattr__(self, "_u", compile_program(build_u(self.kind), self.noise))
        object.__setattr__(self, "_v1", compile_program(build_v(self.kind, 1), self.noise, 1))
        object.__setattr__(self, "_v2", compile_program(build_v(self.kind, 2), self.noise, 1))

    @property
    def n_params(self):
        return self.kind.n_params

    def probabilities(self, inputs, thetas):
        """Return ``probs[b, m, k]`` for parameter row ``b``, input ``m`` and
        outcome ``k`` in ``00, 01, 10, 11`` order.

        ``inputs`` has shape ``(M, 4, 4)`` (or ``(4, 4)``), ``thetas`` has
        shape ``(B, n_params)`` (or ``(n_params,)``).
        """
        inputs = np.asarray(inputs, dtype=complex)
        thetas = np.asarray(thetas, dtype=float)
        squeeze_in = inputs.ndim == 2
        squeeze_th = thetas.ndim == 1
        inputs = inputs.reshape(-1, 4, 4)
        thetas = thetas.reshape(-1, thetas.shape[-1])
        if thetas.shape[1] != self.n_params:
            raise ParameterCountError(
                f"{self.kind.name} circuit takes {self.n_params} parameters, got {thetas.shape[1]}"
            )
        nb, nm = thetas.shape[0], inputs.shape[0]
        angles = np.ascontiguousarray(np.repeat(thetas, nm, axis=0))
        rho = np.zeros((nb * nm, 16, 16), dtype=complex)
        rho[:, :4, :4] = np.tile(inputs, (nb, 1, 1))
        kernels.run_program(rho, N_QUBITS, self._u[0], self._u[1], angles)
        probs = np.empty((nb * nm, 4))
        for m0, (prog, noise) in ((0, self._v2), (1, self._v1)):
            block = np.ascontiguousarray(rho[:, 8 * m0 : 8 * m0 + 8, 8 * m0 : 8 * m0 + 8])
            kernels.run_program(block, 3, prog, noise, angles)
            diag = np.real(np.diagonal(block, axis1=1, axis2=2))
            probs[:, 2 * m0] = diag[:, :4].sum(axis=1)
            probs[:, 2 * m0 + 1] = diag[:, 4:].sum(axis=1)
        probs = probs.reshape(nb, nm, 4)
        if squeeze_in:
            probs = probs[:, 0]
        if squeeze_th:
            probs = probs[0]
        return probs
