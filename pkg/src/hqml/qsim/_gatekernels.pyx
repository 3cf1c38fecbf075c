# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector gate kernels.

Same contract as ``_gatekernels_py``: in-place updates of a complex128
amplitude array, wire 0 = least significant basis-index bit.  The whole
circuit loop lives in C so a circuit evaluation costs a single Python call;
this is the hot path of parameter-shift training.
"""

from libc.math cimport cos, sin, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF KIND_H = 0
DEF KIND_X = 1
DEF KIND_RX = 2
DEF KIND_RY = 3
DEF KIND_RZ = 4
DEF KIND_CNOT = 5
DEF KIND_CRZ = 6


cdef void _single(double complex* a, Py_ssize_t dim, int wire,
                  double complex m00, double complex m01,
                  double complex m10, double complex m11) noexcept nogil:
    cdef Py_ssize_t stride = 1 << wire
    cdef Py_ssize_t block = stride << 1
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off, i, j
    cdef double complex a0, a1
    while base < dim:
        for off in range(stride):
            i = base + off
            j = i + stride
            a0 = a[i]
            a1 = a[j]
            a[i] = m00 * a0 + m01 * a1
            a[j] = m10 * a0 + m11 * a1
        base += block


cdef void _diag(double complex* a, Py_ssize_t dim, int wire,
                double complex d0, double complex d1) noexcept nogil:
    cdef Py_ssize_t stride = 1 << wire
    cdef Py_ssize_t block = stride << 1
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t off, i
    while base < dim:
        for off in range(stride):
            i = base + off
            a[i] = d0 * a[i]
            a[i + stride] = d1 * a[i + stride]
        base += block


cdef void _cnot(double complex* a, Py_ssize_t dim, int control, int target) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t cbit = 1 << control
    cdef Py_ssize_t tbit = 1 << target
    cdef double complex tmp
    for i in range(dim):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            tmp = a[i]
            a[i] = a[j]
            a[j] = tmp


cdef void _crz(double complex* a, Py_ssize_t dim, int control, int target,
               double angle) noexcept nogil:
    cdef Py_ssize_t i
    cdef Py_ssize_t cbit = 1 << control
    cdef Py_ssize_t tbit = 1 << target
    cdef double half = angle / 2.0
    cdef double complex p0 = cos(half) - 1j * sin(half)
    cdef double complex p1 = cos(half) + 1j * sin(half)
    for i in range(dim):
        if i & cbit:
            if i & tbit:
                a[i] = p1 * a[i]
            else:
                a[i] = p0 * a[i]


cdef int _dispatch(double complex* a, Py_ssize_t dim, int kind, int w0, int w1,
                   double angle) noexcept nogil:
    cdef double c, s
    cdef double inv_sqrt2 = 1.0 / sqrt(2.0)
    if kind == KIND_H:
        _single(a, dim, w0, inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2)
    elif kind == KIND_X:
        _single(a, dim, w0, 0, 1, 1, 0)
    elif kind == KIND_RX:
        c = cos(angle / 2.0)
        s = sin(angle / 2.0)
        _single(a, dim, w0, c, -1j * s, -1j * s, c)
    elif kind == KIND_RY:
        c = cos(angle / 2.0)
        s = sin(angle / 2.0)
        _single(a, dim, w0, c, -s, s, c)
    elif kind == KIND_RZ:
        c = cos(angle / 2.0)
        s = sin(angle / 2.0)
        _diag(a, dim, w0, c - 1j * s, c + 1j * s)
    elif kind == KIND_CNOT:
        _cnot(a, dim, w0, w1)
    elif kind == KIND_CRZ:
        _crz(a, dim, w0, w1, angle)
    else:
        return -1
    return 0


def apply_gate_inplace(double complex[::1] amps, int n_wires, int kind,
                       int w0, int w1, double angle):
    if _dispatch(&amps[0], amps.shape[0], kind, w0, w1, angle) != 0:
        raise ValueError(f"unknown gate kind code {kind}")


def expect_z(double complex[::1] amps, int n_wires, int wire):
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t wbit = 1 << wire
    cdef Py_ssize_t i
    cdef double p = 0.0
    cdef double complex v
    with nogil:
        for i in range(dim):
            v = amps[i]
            if i & wbit:
                p -= v.real * v.real + v.imag * v.imag
            else:
                p += v.real * v.real + v.imag * v.imag
    return p


def run_compiled(double complex[::1] amps, int n_wires,
                 const signed char[::1] kinds, const int[::1] w0s,
                 const int[::1] w1s, const double[::1] angles,
                 const int[::1] obs, double[::1] out):
    """Reset ``amps`` to |0...0>, apply all gates, write <Z> per observable."""
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t n_ops = kinds.shape[0]
    cdef Py_ssize_t i, j, wbit
    cdef double p
    cdef double complex v
    cdef int bad = 0
    with nogil:
        for i in range(dim):
            amps[i] = 0
        amps[0] = 1
        for i in range(n_ops):
            if _dispatch(&amps[0], dim, kinds[i], w0s[i], w1s[i], angles[i]) != 0:
                bad = 1
                break
        if not bad:
            for j in range(obs.shape[0]):
                wbit = 1 << obs[j]
                p = 0.0
                for i in range(dim):
                    v = amps[i]
                    if i & wbit:
                        p -= v.real * v.real + v.imag * v.imag
                    else:
                        p += v.real * v.real + v.imag * v.imag
                out[j] = p
    if bad:
        raise ValueError("unknown gate kind code in compiled circuit")
