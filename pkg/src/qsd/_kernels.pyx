# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled circuit-program interpreter for batched density matrices.

Mirrors :mod:`qsd._kernels_py` exactly; see that module for the program format.
"""
from libc.math cimport cos, sin

import numpy as np

cdef enum:
    OP_RX = 0
    OP_RY = 1
    OP_RZ = 2
    OP_CNOT = 3
    OP_DEP1 = 4
    OP_DEP2 = 5


cdef inline void _conjugate(double complex* r, Py_ssize_t dim, Py_ssize_t mask,
                            double complex u00, double complex u01,
                            double complex u10, double complex u11) noexcept nogil:
    # r <- U r U^dagger, one 2x2 block (i0,i1) x (j0,j1) at a time
    cdef Py_ssize_t i0, i1, j0, j1
    cdef double complex a, b, c, d, t00, t01, t10, t11
    cdef double complex c00 = u00.conjugate(), c01 = u01.conjugate()
    cdef double complex c10 = u10.conjugate(), c11 = u11.conjugate()
    for i0 in range(dim):
        if i0 & mask:
            continue
        i1 = i0 | mask
        for j0 in range(dim):
            if j0 & mask:
                continue
            j1 = j0 | mask
            a = r[i0 * dim + j0]
            b = r[i0 * dim + j1]
            c = r[i1 * dim + j0]
            d = r[i1 * dim + j1]
            t00 = u00 * a + u01 * c
            t01 = u00 * b + u01 * d
            t10 = u10 * a + u11 * c
            t11 = u10 * b + u11 * d
            r[i0 * dim + j0] = t00 * c00 + t01 * c01
            r[i0 * dim + j1] = t00 * c10 + t01 * c11
            r[i1 * dim + j0] = t10 * c00 + t11 * c01
            r[i1 * dim + j1] = t10 * c10 + t11 * c11


cdef inline void _phase(double complex* r, Py_ssize_t dim, Py_ssize_t mask,
                        double complex w) noexcept nogil:
    # RZ with w = e^{i theta}: (1,0) entries gain w, (0,1) entries gain conj(w)
    cdef Py_ssize_t i, j
    cdef double complex wc = w.conjugate()
    for i in range(dim):
        for j in range(dim):
            if (i & mask) and not (j & mask):
                r[i * dim + j] = r[i * dim + j] * w
            elif (j & mask) and not (i & mask):
                r[i * dim + j] = r[i * dim + j] * wc


cdef inline void _cnot(double complex* r, Py_ssize_t dim,
                       Py_ssize_t cmask, Py_ssize_t tmask) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex tmp
    for i in range(dim):
        if (i & cmask) and not (i & tmask):
            k = i | tmask
            for j in range(dim):
                tmp = r[i * dim + j]
                r[i * dim + j] = r[k * dim + j]
                r[k * dim + j] = tmp
    for j in range(dim):
        for i in range(dim):
            if (i & cmask) and not (i & tmask):
                k = i | tmask
                tmp = r[j * dim + i]
                r[j * dim + i] = r[j * dim + k]
                r[j * dim + k] = tmp


cdef inline void _depolarize(double complex* r, Py_ssize_t dim, Py_ssize_t mask,
                             double p) noexcept nogil:
    cdef Py_ssize_t i0, i1, j0, j1
    cdef double complex a, d
    cdef double keep = 1.0 - 0.5 * p, swap = 0.5 * p, shrink = 1.0 - p
    for i0 in range(dim):
        if i0 & mask:
            continue
        i1 = i0 | mask
        for j0 in range(dim):
            if j0 & mask:
                continue
            j1 = j0 | mask
            a = r[i0 * dim + j0]
            d = r[i1 * dim + j1]
            r[i0 * dim + j0] = keep * a + swap * d
            r[i1 * dim + j1] = keep * d + swap * a
            r[i0 * dim + j1] = shrink * r[i0 * dim + j1]
            r[i1 * dim + j0] = shrink * r[i1 * dim + j0]


def run_program(double complex[:, :, ::1] rho, int n_qubits, long long[:, ::1] program,
                double[::1] noise, double[:, ::1] angles):
    """Execute ``program`` in place on every matrix of the batch ``rho``."""
    cdef Py_ssize_t nb = rho.shape[0], dim = rho.shape[1]
    cdef Py_ssize_t n_ops = program.shape[0]
    cdef Py_ssize_t b, k, op, qa, qb, slot, mask
    cdef double theta, c, s
    cdef double complex* r
    if dim != (1 << n_qubits) or rho.shape[2] != dim:
        raise ValueError("rho batch does not match n_qubits")
    if noise.shape[0] != n_ops:
        raise ValueError("noise must have one entry per program row")
    if angles.shape[0] != nb:
        raise ValueError("angles must have one row per batch element")
    if nb == 0:
        return np.asarray(rho)
    with nogil:
        for b in range(nb):
            r = &rho[b, 0, 0]
            for k in range(n_ops):
                op = program[k, 0]
                qa = program[k, 1]
                qb = program[k, 2]
                slot = program[k, 3]
                mask = 1 << (n_qubits - 1 - qa)
                if op == OP_RX:
                    theta = angles[b, slot]
                    c = cos(0.5 * theta)
                    s = sin(0.5 * theta)
                    _conjugate(r, dim, mask, c, -1j * s, -1j * s, c)
                elif op == OP_RY:
                    theta = angles[b, slot]
                    c = cos(0.5 * theta)
                    s = sin(0.5 * theta)
                    _conjugate(r, dim, mask, c, -s, s, c)
                elif op == OP_RZ:
                    theta = angles[b, slot]
                    _phase(r, dim, mask, cos(theta) + 1j * sin(theta))
                elif op == OP_CNOT:
                    _cnot(r, dim, mask, 1 << (n_qubits - 1 - qb))
                elif op == OP_DEP1:
                    if noise[k] != 0.0:
                        _depolarize(r, dim, mask, noise[k])
                elif op == OP_DEP2:
                    if noise[k] != 0.0:
                        _depolarize(r, dim, mask, noise[k])
                        _depolarize(r, dim, 1 << (n_qubits - 1 - qb), noise[k])
    return np.asarray(rho)
