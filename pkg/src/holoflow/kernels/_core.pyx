# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched su(2) exponential, sequential parallel
transport, and the batched tridiagonal (Thomas) solve.  Signatures mirror
``fallback.py``; results agree with the fallback to roundoff."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, sin, sqrt

cnp.import_array()


def su2_exp(xs):
    """exp of traceless anti-Hermitian 2x2 matrices, shape (..., 2, 2)."""
    arr = np.ascontiguousarray(xs, dtype=np.complex128)
    shape = arr.shape
    flat = arr.reshape(-1, 2, 2)
    out = np.empty_like(flat)
    _su2_exp_flat(flat, out)
    return out.reshape(shape)


cdef void _su2_exp_flat(cnp.complex128_t[:, :, ::1] x,
                        cnp.complex128_t[:, :, ::1] out) nogil:
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t i
    cdef double theta, c, s, t2
    cdef double complex det
    for i in range(m):
        det = x[i, 0, 0] * x[i, 1, 1] - x[i, 0, 1] * x[i, 1, 0]
        t2 = det.real
        if t2 < 0.0:
            t2 = 0.0
        theta = sqrt(t2)
        c = cos(theta)
        if theta > 1e-30:
            s = sin(theta) / theta
        else:
            s = 1.0 - t2 / 6.0
        out[i, 0, 0] = c + s * x[i, 0, 0]
        out[i, 0, 1] = s * x[i, 0, 1]
        out[i, 1, 0] = s * x[i, 1, 0]
        out[i, 1, 1] = c + s * x[i, 1, 1]


def transport(xi_half, double dt):
    """Midpoint-rule transports of dx/dt = x xi; xi_half at staggered nodes,
    shape (N, n, n); returns (N+1, n, n) with x[0] = I."""
    xi = np.ascontiguousarray(xi_half, dtype=np.complex128)
    cdef Py_ssize_t n_steps = xi.shape[0]
    cdef Py_ssize_t n = xi.shape[1]
    out = np.empty((n_steps + 1, n, n), dtype=np.complex128)
    if n == 1:
        _transport_u1(xi, out, dt)
        return out
    if n == 2:
        steps = np.empty_like(xi)
        scaled = np.ascontiguousarray(dt * xi)
        _su2_exp_flat(scaled, steps)
        _chain_2x2(steps, out)
        return out
    raise NotImplementedError("compiled transport supports n = 1, 2")


cdef void _transport_u1(cnp.complex128_t[:, :, ::1] xi,
                        cnp.complex128_t[:, :, ::1] out, double dt) nogil:
    cdef Py_ssize_t m = xi.shape[0]
    cdef Py_ssize_t j
    cdef double complex acc = 1.0
    cdef double complex z
    cdef double radial
    out[0, 0, 0] = 1.0
    for j in range(m):
        z = dt * xi[j, 0, 0]
        radial = exp(z.real)
        acc = acc * (radial * (cos(z.imag) + 1j * sin(z.imag)))
        out[j + 1, 0, 0] = acc


cdef void _chain_2x2(cnp.complex128_t[:, :, ::1] steps,
                     cnp.complex128_t[:, :, ::1] out) nogil:
    cdef Py_ssize_t m = steps.shape[0]
    cdef Py_ssize_t j
    cdef double complex a00, a01, a10, a11
    cdef double complex b00, b01, b10, b11
    a00 = 1.0; a01 = 0.0; a10 = 0.0; a11 = 1.0
    out[0, 0, 0] = 1.0; out[0, 0, 1] = 0.0
    out[0, 1, 0] = 0.0; out[0, 1, 1] = 1.0
    for j in range(m):
        b00 = a00 * steps[j, 0, 0] + a01 * steps[j, 1, 0]
        b01 = a00 * steps[j, 0, 1] + a01 * steps[j, 1, 1]
        b10 = a10 * steps[j, 0, 0] + a11 * steps[j, 1, 0]
        b11 = a10 * steps[j, 0, 1] + a11 * steps[j, 1, 1]
        a00 = b00; a01 = b01; a10 = b10; a11 = b11
        out[j + 1, 0, 0] = a00
        out[j + 1, 0, 1] = a01
        out[j + 1, 1, 0] = a10
        out[j + 1, 1, 1] = a11


def thomas(lower, diag, upper, rhs):
    """Solve one real tridiagonal system for a batch of complex right-hand
    sides; rhs shape (N, M)."""
    lo = np.ascontiguousarray(lower, dtype=np.float64)
    di = np.ascontiguousarray(diag, dtype=np.float64)
    up = np.ascontiguousarray(upper, dtype=np.float64)
    x = np.array(np.ascontiguousarray(rhs, dtype=np.complex128))
    cp = np.empty(di.shape[0], dtype=np.float64)
    _thomas_inner(lo, di, up, x, cp)
    return x


cdef void _thomas_inner(double[::1] lower, double[::1] diag, double[::1] upper,
                        cnp.complex128_t[:, ::1] x, double[::1] cp) nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t m = x.shape[1]
    cdef Py_ssize_t i, j
    cdef double beta = diag[0]
    for j in range(m):
        x[0, j] = x[0, j] / beta
    for i in range(1, n):
        cp[i - 1] = upper[i - 1] / beta
        beta = diag[i] - lower[i] * cp[i - 1]
        for j in range(m):
            x[i, j] = (x[i, j] - lower[i] * x[i - 1, j]) / beta
    for i in range(n - 2, -1, -1):
        for j in range(m):
            x[i, j] = x[i, j] - cp[i] * x[i + 1, j]
