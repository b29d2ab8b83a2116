"""Pure-numpy implementations of the hot kernels.

The compiled extension in ``_core.pyx`` mirrors these signatures; the
backend is chosen once at import time in ``kernels.__init__``.
"""

from __future__ import annotations

import numpy as np


def su2_exp(mats: np.ndarray) -> np.ndarray:
    """exp of traceless anti-Hermitian 2x2 matrices, any leading shape."""
    mats = np.ascontiguousarray(mats, dtype=complex)
    theta2 = np.real(
        mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    )
    theta = np.sqrt(np.maximum(theta2, 0.0))
    c = np.cos(theta)
    out = np.sinc(theta / np.pi)[..., None, None] * mats
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return out


def transport(xi_half: np.ndarray, dt: float) -> np.ndarray:
    """Integrate dx/dt = x * xi with x(0) = I by the geometric midpoint rule.

    ``xi_half`` holds the algebra values at the staggered nodes t_j + dt/2,
    shape (N, n, n).  Returns all N+1 transport matrices including the
    monodromy x(2*pi) in the last slot.
    """
    xi_half = np.asarray(xi_half, dtype=complex)
    n_steps, n, _ = xi_half.shape
    if n == 1:
        out = np.empty((n_steps + 1, 1, 1), dtype=complex)
        out[0] = 1.0
        out[1:, 0, 0] = np.cumprod(np.exp(dt * xi_half[:, 0, 0]))
        return out
    if n == 2:
        steps = su2_exp(dt * xi_half)
    else:
        from ..groups import exp_alg

        steps = exp_alg("SU2" if n == 2 else "U1", dt * xi_half)
    out = np.empty((n_steps + 1, n, n), dtype=complex)
    out[0] = np.eye(n)
    acc = np.eye(n, dtype=complex)
    for j in range(n_steps):
        acc = acc @ steps[j]
        out[j + 1] = acc
    return out


def thomas(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
           rhs: np.ndarray) -> np.ndarray:
    """Solve a single tridiagonal system for a batch of right-hand sides.

    ``lower[i]`` multiplies x[i-1] in row i (lower[0] unused), ``upper[i]``
    multiplies x[i+1] (upper[-1] unused).  ``rhs`` has shape (N, M).
    """
    n = diag.shape[0]
    rhs = np.asarray(rhs)
    cp = np.empty(n)
    x = np.array(rhs, dtype=rhs.dtype)
    beta = diag[0]
    x[0] = rhs[0] / beta
    for i in range(1, n):
        cp[i - 1] = upper[i - 1] / beta
        beta = diag[i] - lower[i] * cp[i - 1]
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x
