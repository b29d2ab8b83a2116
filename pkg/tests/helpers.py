"""Shared test utilities: seeded random loops and finite-difference oracles."""

from __future__ import annotations

import numpy as np

from holoflow.groups import GroupLoop, exp_alg, get_group


def random_periodic_algebra(group, n_t: int, seed: int, amplitude: float = 0.2,
                            modes: int = 3, include_constant: bool = True):
    """Algebra-valued loop with a hard low-mode Fourier cutoff (analytic,
    so spectral operations on it are exact to roundoff)."""
    g = get_group(group)
    rng = np.random.default_rng(seed)
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    out = np.zeros((n_t, g.n, g.n), dtype=complex)
    if include_constant:
        out += g.from_coeffs(amplitude * rng.standard_normal(g.dim))
    for k in range(1, modes + 1):
        scale = amplitude / k
        ca = g.from_coeffs(scale * rng.standard_normal(g.dim))
        cb = g.from_coeffs(scale * rng.standard_normal(g.dim))
        out += np.cos(k * t)[:, None, None] * ca + np.sin(k * t)[:, None, None] * cb
    return out


def random_loop(group, n_t: int, seed: int, amplitude: float = 0.2,
                modes: int = 3, base_class: int = 0) -> GroupLoop:
    """Smooth random loop: one-parameter base of the given class times a
    pointwise exponential of a low-mode algebra loop."""
    g = get_group(group)
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    if g.name == "U1":
        base = exp_alg(g, (1j * base_class * t)[:, None, None])
    else:
        from holoflow.fields import geodesic_generator

        eta = geodesic_generator(g, base_class)
        base = exp_alg(g, t[:, None, None] * eta.mat)
    delta = random_periodic_algebra(g, n_t, seed, amplitude, modes,
                                    include_constant=False)
    return GroupLoop(g, base @ exp_alg(g, delta))


def fd_gradient(f, x0: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function on R^n."""
    x0 = np.asarray(x0, dtype=float)
    out = np.empty_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e.flat[i] = h
        out.flat[i] = (f(x0 + e) - f(x0 - e)) / (2.0 * h)
    return out


def fd_hessian(f, n: int, h: float = 1e-3) -> np.ndarray:
    """Central finite-difference Hessian of f: R^n -> R at the origin.

    Mixed entries use the four-point stencil on f(a e_p + b e_q); this is
    the second derivative through the same one-argument chart that f wraps,
    so it is the correct oracle for charts that are nonlinear in their
    coefficient vector.
    """
    hess = np.empty((n, n))
    f0 = f(np.zeros(n))
    for p in range(n):
        ep = np.zeros(n)
        ep[p] = h
        fp = f(ep)
        fm = f(-ep)
        hess[p, p] = (fp - 2.0 * f0 + fm) / h**2
        for q in range(p + 1, n):
            eq = np.zeros(n)
            eq[q] = h
            val = (f(ep + eq) - f(ep - eq) - f(-ep + eq) + f(-ep - eq)) / (4.0 * h**2)
            hess[p, q] = hess[q, p] = val
    return hess
