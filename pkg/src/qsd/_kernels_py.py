"""Pure-numpy interpreter for circuit programs.

A program is an ``int64`` array with one row ``(opcode, qubit_a, qubit_b, slot)``
per instruction.  Opcodes:

    0 RX, 1 RY, 2 RZ   rotation of ``qubit_a`` by ``angles[:, slot]``
    3 CNOT             control ``qubit_a``, target ``qubit_b``
    4 DEP1             single-qubit depolarizing on ``qubit_a`` with ``noise[row]``
    5 DEP2             depolarizing with ``noise[row]`` on ``qubit_a`` then ``qubit_b``

Qubit 0 is the most significant bit of the basis index.  ``rho`` has shape
``(batch, 2**n, 2**n)`` and is updated in place.
"""

import numpy as np

OP_RX, OP_RY, OP_RZ, OP_CNOT, OP_DEP1, OP_DEP2 = range(6)


def _rotation_batch(op, theta):
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    u = np.empty((theta.shape[0], 2, 2), dtype=complex)
    if op == OP_RX:
        u[:, 0, 0] = c
        u[:, 0, 1] = -1j * s
        u[:, 1, 0] = -1j * s
        u[:, 1, 1] = c
    elif op == OP_RY:
        u[:, 0, 0] = c
        u[:, 0, 1] = -s
        u[:, 1, 0] = s
        u[:, 1, 1] = c
    else:
        u[:, 0, 0] = c - 1j * s
        u[:, 0, 1] = 0.0
        u[:, 1, 0] = 0.0
        u[:, 1, 1] = c + 1j * s
    return u


def _apply_1q(rho, n_qubits, qubit, u):
    nb = rho.shape[0]
    lead = 2**qubit
    trail = 2 ** (n_qubits - qubit - 1)
    t = rho.reshape(nb, lead, 2, trail, lead, 2, trail)
    t = np.einsum("bij,bxjyuvw->bxiyuvw", u, t)
    t = np.einsum("bxiyujw,bvj->bxiyuvw", t, u.conj())
    rho[...] = t.reshape(rho.shape)


def _cnot_perm(n_qubits, control, target):
    idx = np.arange(2**n_qubits)
    cmask = 1 << (n_qubits - 1 - control)
    tmask = 1 << (n_qubits - 1 - target)
    return np.where(idx & cmask, idx ^ tmask, idx)


def _depolarize(rho, n_qubits, qubit, p):
    nb = rho.shape[0]
    lead = 2**qubit
    trail = 2 ** (n_qubits - qubit - 1)
    t = rho.reshape(nb, lead, 2, trail, lead, 2, trail)
    d0 = t[:, :, 0, :, :, 0, :].copy()
    d1 = t[:, :, 1, :, :, 1, :].copy()
    t[:, :, 0, :, :, 0, :] = (1.0 - 0.5 * p) * d0 + 0.5 * p * d1
    t[:, :, 1, :, :, 1, :] = (1.0 - 0.5 * p) * d1 + 0.5 * p * d0
    t[:, :, 0, :, :, 1, :] *= 1.0 - p
    t[:, :, 1, :, :, 0, :] *= 1.0 - p


def run_program(rho, n_qubits, program, noise, angles):
    """Execute ``program`` in place on every matrix of the batch ``rho``."""
    nb, dim = rho.shape[0], rho.shape[1]
    if dim != 2**n_qubits or rho.shape[2] != dim:
        raise ValueError("rho batch does not match n_qubits")
    if len(noise) != len(program):
        raise ValueError("noise must have one entry per program row")
    if angles.shape[0] != nb:
        raise ValueError("angles must have one row per batch element")
    for k, (op, qa, qb, slot) in enumerate(program):
        if op in (OP_RX, OP_RY, OP_RZ):
            _apply_1q(rho, n_qubits, qa, _rotation_batch(op, angles[:, slot]))
        elif op == OP_CNOT:
            perm = _cnot_perm(n_qubits, qa, qb)
            rho[...] = rho[:, perm][:, :, perm]
        elif op == OP_DEP1:
            if noise[k] != 0.0:
                _depolarize(rho, n_qubits, qa, noise[k])
        elif op == OP_DEP2:
            if noise[k] != 0.0:
                _depolarize(rho, n_qubits, qa, noise[k])
                _depolarize(rho, n_qubits, qb, noise[k])
        else:
            raise ValueError(f"unknown opcode {op}")
    return rho
