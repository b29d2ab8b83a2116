"""Connections on the 2-sphere in radial gauge.

State and conventions
---------------------
A connection is stored through its local form ``u(r, t) dt`` on the chart
covering the north pole, on the grid ``r_i = i*pi/N_r`` (i = 0..N_r),
``t_j = 2*pi*j/N_t``.  The metric data used everywhere:

* ``lam(r) = sin(r)`` (the volume density: dvol = lam dr dt),
* ``ell(r) = (1 - cos r)/2`` (so ell' = lam/2, ell(0) = 0, ell(pi) = 1).

Because u has only a dt-component, the curvature two-form is exactly
``(d_r u) dr ^ dt``; its Hodge dual is the scalar field ``w = lam^-1 d_r u``.

Holonomy identity
-----------------
The local forms on the two polar charts are related by

    u_south(r, t) = x(t) u(pi - r, t) x(t)^-1 - (d_t x x^-1)(t),

where x(t) is the pole-to-pole parallel transport along the meridian with
longitude t.  Regularity of the southern form at its own pole (r -> 0, that
is at r = pi in northern coordinates) forces

    x^-1 d_t x = u(pi, .),

so the transport loop solves dx/dt = x * xi with xi := u[N_r].  That ODE is
what ``holonomy`` integrates; a nonclosing solution (monodromy far from the
identity) signals grid data that does not describe a smooth bundle
connection, which is the closure constraint validated here.

Energy quadrature
-----------------
``ym_energy`` uses the staggered flux quadrature

    YM = (dt / (2 dr)) * sum_{i,j} |u[i+1,j] - u[i,j]|^2 / lam_half[i],
    lam_half[i] = 2 (ell[i+1] - ell[i]) / dr,

a second-order-consistent discretization of (1/2) int lam^-1 |d_r u|^2 that
is *exact* on fields u = ell * eta and makes the splitting
u = ell*xi + m satisfy the discrete identity

    YM(u) = (1/2) * E(xi) + (1/2) ||lam^-1 d_r m||^2

with zero cross term (it telescopes against the vanishing boundary rows of
m).  Here E(xi) = (1/2) sum |xi_j|^2 dt is the loop energy in the [0, 2*pi]
parametrization, which fixes the energy-comparison constant of this package
to C = 1/2.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import BoundaryViolationError, ClosureError, GroupMismatchError, NewtonError
from .groups import (
    AlgebraElement,
    GroupElement,
    GroupLoop,
    GroupSpec,
    get_group,
    log_grp,
    spectral_derivative,
    spectral_midpoints,
    unitarize,
)

DEFAULT_TOL_CLOSURE = 1e-8


class SphereGrid:
    """Polar grid on the sphere with precomputed metric factors."""

    __slots__ = ("n_r", "n_t", "dr", "dt", "r", "t", "lam", "ell", "lam_half",
                 "lam_eff", "w_r")

    def __init__(self, n_r: int, n_t: int):
        if n_r < 4:
            raise ValueError("need at least 4 radial intervals")
        if n_t < 4 or (n_t & (n_t - 1)) != 0:
            raise ValueError("n_t must be a power of two >= 4")
        self.n_r = n_r
        self.n_t = n_t
        self.dr = np.pi / n_r
        self.dt = 2.0 * np.pi / n_t
        self.r = np.linspace(0.0, np.pi, n_r + 1)
        self.t = 2.0 * np.pi * np.arange(n_t) / n_t
        self.lam = np.sin(self.r)
        self.ell = 0.5 * (1.0 - np.cos(self.r))
        self.lam_half = 2.0 * np.diff(self.ell) / self.dr
        self.lam_eff = np.maximum(self.lam, np.sin(self.dr / 2.0))
        # trapezoid weights in r
        self.w_r = np.full(n_r + 1, self.dr)
        self.w_r[0] = self.w_r[-1] = self.dr / 2.0
        for arr in (self.r, self.t, self.lam, self.ell, self.lam_half,
                    self.lam_eff, self.w_r):
            arr.setflags(write=False)

    def __eq__(self, other):
        return (
            isinstance(other, SphereGrid)
            and self.n_r == other.n_r
            and self.n_t == other.n_t
        )

    def __repr__(self):
        return f"SphereGrid(n_r={self.n_r}, n_t={self.n_t})"


class RadialGaugeField:
    """A radial-gauge connection: grid, group, and the chart form
    u[i][j] in the algebra.

    The northern pole row u[0] is pinned to zero for fields that describe
    parallel-transport-based data; loop-gauge-transformed fields may carry a
    nonzero pole row and are marked ``pinned=False``.
    """

    __slots__ = ("grid", "group", "u", "pinned")

    def __init__(self, grid: SphereGrid, group, u: np.ndarray, *,
                 pinned: bool = True, check: bool = True):
        self.grid = grid
        self.group = get_group(group)
        u = np.asarray(u, dtype=complex)
        n = self.group.n
        if u.shape != (grid.n_r + 1, grid.n_t, n, n):
            raise ValueError(f"bad field shape {u.shape}")
        if check:
            defect = np.max(np.abs(u + np.conj(np.swapaxes(u, -1, -2))))
            if defect > 1e-9:
                raise ValueError(f"field not algebra-valued (defect {defect:.2e})")
            if pinned and np.max(np.abs(u[0])) > 1e-9:
                raise BoundaryViolationError("pole row u[0] must vanish")
        u = np.array(u)
        u.setflags(write=False)
        self.u = u
        self.pinned = pinned

    @classmethod
    def zeros(cls, grid: SphereGrid, group) -> "RadialGaugeField":
        g = get_group(group)
        return cls(grid, g, np.zeros((grid.n_r + 1, grid.n_t, g.n, g.n), complex),
                   check=False)

    @classmethod
    def geodesic(cls, grid: SphereGrid, eta: AlgebraElement) -> "RadialGaugeField":
        """The field u = ell(r) * eta (constant loop direction)."""
        u = grid.ell[:, None, None, None] * eta.mat[None, None, :, :]
        u = np.broadcast_to(u, (grid.n_r + 1, grid.n_t) + eta.mat.shape).copy()
        return cls(grid, eta.group, u, check=False)

    def with_u(self, u: np.ndarray, *, pinned: bool | None = None) -> "RadialGaugeField":
        return RadialGaugeField(
            self.grid, self.group, u,
            pinned=self.pinned if pinned is None else pinned, check=False,
        )

    @property
    def xi(self) -> np.ndarray:
        """The transport-generating loop u[N_r], shape (n_t, n, n)."""
        return self.u[-1]

    def __repr__(self):
        return (f"RadialGaugeField({self.group.name}, n_r={self.grid.n_r}, "
                f"n_t={self.grid.n_t})")


class ConnectionDecomposition:
    """The splitting u = ell * xi + m with vanishing boundary rows of m."""

    __slots__ = ("grid", "group", "xi", "m")

    def __init__(self, grid, group, xi, m):
        self.grid = grid
        self.group = get_group(group)
        self.xi = xi
        self.m = m


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise commutator of stacked matrices."""
    return a @ b - b @ a


def _norm2(mats: np.ndarray) -> np.ndarray:
    """Pointwise algebra norm |X|^2 = -Re tr(X^2) = Frobenius^2."""
    return np.sum(np.abs(mats) ** 2, axis=(-2, -1))


def radial_derivative(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    """Second-order d/dr: central differences inside, one-sided at the
    poles."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * grid.dr)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * grid.dr)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * grid.dr)
    return out


def angular_derivative(f: np.ndarray) -> np.ndarray:
    """Spectral d/dt along axis 1 of a grid field."""
    return spectral_derivative(f, axis=1)


# ---------------------------------------------------------------------------
# curvature and energies
# ---------------------------------------------------------------------------


def curvature_density(field: RadialGaugeField) -> np.ndarray:
    """The dual curvature w = lam^-1 d_r u.

    Interior rows divide by lam_eff = max(lam, sin(dr/2)); the two pole
    rows evaluate the regularized limit w = u''(pole) / lam'(pole)
    (one-sided second derivative over cos of the pole angle), which is the
    exact limit for fields smooth across the poles.
    """
    g = field.grid
    u = field.u
    du = radial_derivative(g, u)
    w = du / g.lam_eff[:, None, None, None]
    dr2 = g.dr ** 2
    w[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / dr2
    w[-1] = -(2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / dr2
    return w


def ym_energy(field: RadialGaugeField) -> float:
    """Yang-Mills energy (1/2) int lam^-1 |d_r u|^2 dr dt by the staggered
    flux quadrature (see module docstring)."""
    g = field.grid
    du = np.diff(field.u, axis=0)
    vals = _norm2(du) / g.lam_half[:, None]
    return float(0.5 * g.dt / g.dr * np.sum(vals))


def residual_energy(grid: SphereGrid, m: np.ndarray) -> float:
    """(1/2) ||lam^-1 d_r m||^2 over the sphere, same staggered quadrature
    as ym_energy."""
    dm = np.diff(m, axis=0)
    vals = _norm2(dm) / grid.lam_half[:, None]
    return float(0.5 * grid.dt / grid.dr * np.sum(vals))


def xi_energy(grid: SphereGrid, xi: np.ndarray) -> float:
    """Loop energy (1/2) int |xi|^2 dt of an algebra-valued loop sample."""
    return float(0.5 * grid.dt * np.sum(_norm2(xi)))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


def decompose(field: RadialGaugeField) -> ConnectionDecomposition:
    """Split u = ell * xi + m; exact by construction, with the boundary rows
    of m vanishing identically for pinned fields."""
    xi = np.array(field.xi)
    m = field.u - field.grid.ell[:, None, None, None] * xi[None]
    # the top row is exact by ell(pi) = 1; zero it bitwise
    m = np.array(m)
    m[-1] = 0.0
    if field.pinned:
        m[0] = 0.0
    return ConnectionDecomposition(field.grid, field.group, xi, m)


def build_connection(grid: SphereGrid, group, xi: np.ndarray, m: np.ndarray,
                     tol_closure: float = DEFAULT_TOL_CLOSURE) -> RadialGaugeField:
    """Assemble u = ell * xi + m.

    Requires the boundary rows of m to vanish and the monodromy of xi to be
    the identity within ``tol_closure``.
    """
    g = get_group(group)
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m[0])) > 1e-12 or np.max(np.abs(m[-1])) > 1e-12:
        raise BoundaryViolationError("m must vanish at r = 0 and r = pi")
    hol = monodromy(g, xi, grid.dt)
    defect = np.max(np.abs(hol.mat - np.eye(g.n)))
    if defect > tol_closure:
        raise ClosureError(f"monodromy defect {defect:.3e} exceeds {tol_closure:.1e}")
    u = grid.ell[:, None, None, None] * np.asarray(xi)[None] + m
    return RadialGaugeField(grid, g, u, check=False)


# ---------------------------------------------------------------------------
# holonomy
# ---------------------------------------------------------------------------


def transport_samples(group: GroupSpec, xi: np.ndarray, dt: float) -> np.ndarray:
    """All N+1 parallel transports of dx/dt = x xi, x(0) = I, by the
    geometric midpoint rule with spectral interpolation of xi."""
    xi_half = spectral_midpoints(xi, axis=0)
    xi_half = group.project_algebra(xi_half)
    return kernels.transport(np.ascontiguousarray(xi_half), dt)


def holonomy(field: RadialGaugeField,
             tol_closure: float = DEFAULT_TOL_CLOSURE) -> GroupLoop:
    """The based loop of pole-to-pole parallel transports (the coupling map
    from connections to loops).

    Raises ``ClosureError`` when the transport fails to close, which flags a
    field that is not smooth across the south pole.
    """
    g = field.group
    x = transport_samples(g, field.xi, field.grid.dt)
    defect = np.max(np.abs(x[-1] - np.eye(g.n)))
    if defect > tol_closure:
        raise ClosureError(f"monodromy defect {defect:.3e} exceeds {tol_closure:.1e}")
    return GroupLoop(g, x[:-1], based=True)


def monodromy(group, xi: np.ndarray, dt: float) -> GroupElement:
    """Transport around the full loop: x(2*pi)."""
    g = get_group(group)
    x = transport_samples(g, np.asarray(xi, dtype=complex), dt)
    return GroupElement(g, x[-1])


def winding(xi: np.ndarray, dt: float) -> int:
    """U(1) winding number of a closing loop derivative.

    The integral of xi over the loop must be within 0.1 * 2*pi of an integer
    multiple of 2*pi*i; otherwise the data does not describe a closed U(1)
    loop and a ClosureError is raised.
    """
    xi = np.asarray(xi)
    total = float(np.sum(np.imag(xi[..., 0, 0])) * dt / (2.0 * np.pi))
    n = round(total)
    if abs(total - n) >= 0.1:
        raise ClosureError(f"winding integral {total:.4f} is not near an integer")
    return n


# ---------------------------------------------------------------------------
# closure projection
# ---------------------------------------------------------------------------


def close_xi_smooth(group, xi: np.ndarray, dt: float, tol: float = 1e-13,
                    max_iter: int = 16) -> np.ndarray:
    """Project a loop derivative onto the closure constraint by the smooth
    left correction

        xi(t)  ->  xi(t) - Ad_{x(t)^-1}(log g) / (2*pi),

    where x is the transport of xi and g its monodromy.  In the continuum
    this multiplies the transport path on the left by exp(-t log(g)/2*pi)
    and closes it exactly; because log g commutes with g the corrected loop
    derivative stays smooth and periodic, so spectral operations remain
    accurate.  Iterating absorbs the integrator's own O(dt^2) response
    error; each pass contracts the defect by O(|log g| + dt^2).

    Unlike the constant-shift repair below this changes xi by a full loop,
    so it is the right projection for construction-sized defects; the
    constant-shift Newton remains the drift-control tool.
    """
    g = get_group(group)
    xi = np.asarray(xi, dtype=complex)
    eye = np.eye(g.n)
    for _ in range(max_iter):
        x = transport_samples(g, xi, dt)
        mono = x[-1]
        if np.max(np.abs(mono - eye)) <= tol:
            return xi
        zeta = log_grp(g, unitarize(g, mono[None])[0])
        samples = x[:-1]
        corr = np.conj(np.swapaxes(samples, -1, -2)) @ zeta[None] @ samples
        xi = g.project_algebra(xi - corr / (2.0 * np.pi))
    raise NewtonError(f"smooth closure projection did not reach {tol:.1e} "
                      f"in {max_iter} passes")


def close_xi(group, xi: np.ndarray, dt: float, tol: float = 1e-12,
             max_iter: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Find a smallest constant shift delta with monodromy(xi+delta) = I.

    Newton iteration on log(monodromy) with Levenberg-Marquardt damping:
    near a geodesic class the Jacobian of the constant-shift response is
    nearly singular (the first-order monodromy response to the off-diagonal
    directions averages out), so undamped steps overshoot wildly while the
    damped step follows the second-order-correctable directions.  The
    Jacobian is formed by central finite differences in the orthonormal
    algebra basis.

    Returns (xi + delta, delta).
    """
    g = get_group(group)
    xi = np.asarray(xi, dtype=complex)

    def defect(shift_coeffs):
        mono = monodromy(g, xi + g.from_coeffs(shift_coeffs)[None], dt)
        return g.coeffs(log_grp(g, mono.mat))

    delta = np.zeros(g.dim)
    f = defect(delta)
    if np.linalg.norm(f) >= 0.5:
        raise ClosureError(
            f"monodromy too far from identity (|log| = {np.linalg.norm(f):.3f})")
    h = 1e-6
    mu = 1e-4
    evals = 0
    for _ in range(max_iter):
        fnorm = np.linalg.norm(f)
        if fnorm <= tol:
            break
        jac = np.empty((g.dim, g.dim))
        for a in range(g.dim):
            e = np.zeros(g.dim)
            e[a] = h
            jac[:, a] = (defect(delta + e) - defect(delta - e)) / (2.0 * h)
        jtj = jac.T @ jac
        jtf = jac.T @ f
        accepted = False
        for _ in range(40):
            step = np.linalg.solve(jtj + mu * np.eye(g.dim), -jtf)
            f_trial = defect(delta + step)
            evals += 1
            if np.linalg.norm(f_trial) < fnorm:
                delta = delta + step
                f = f_trial
                mu = max(mu / 4.0, 1e-14)
                accepted = True
                break
            mu *= 8.0
        if not accepted:
            raise NewtonError("closure Newton stalled (no damped descent step)")
    else:
        raise NewtonError(f"closure Newton did not reach {tol:.1e} "
                          f"in {max_iter} iterations")
    return xi + g.from_coeffs(delta)[None], g.from_coeffs(delta)


def project_closure(field: RadialGaugeField, tol: float = 1e-12,
                    max_iter: int = 50) -> RadialGaugeField:
    """Repair monodromy drift by the constant shift xi -> xi + delta,
    applied to the field as u -> u + ell * delta (which leaves the pole row
    and the m-part untouched).  Idempotent within tol."""
    _, delta = close_xi(field.group, field.xi, field.grid.dt, tol=tol,
                        max_iter=max_iter)
    if np.max(np.abs(delta)) == 0.0:
        return field
    u = field.u + field.grid.ell[:, None, None, None] * delta[None, None]
    return field.with_u(u)


# ---------------------------------------------------------------------------
# gauge potential and gradient
# ---------------------------------------------------------------------------


def compute_gauge_potential(field: RadialGaugeField) -> np.ndarray:
    """The zero-form that keeps the flow in radial gauge.

    Writing the flow for the pair (u dt, Psi), the dr-component of the
    full descent direction is lam^-1 (d_t w + [u, w]); the gauge term
    contributes d_r Psi in that slot, so radial gauge is preserved by

        d_r Psi = lam^-1 (d_t w + [u, w]),   Psi(0, .) = 0,

    integrated here by the cumulative trapezoid rule with the
    pole-regularized lam_eff.  The dt-components then combine into the
    evolution equation used by the flow stepper.
    """
    g = field.grid
    w = curvature_density(field)
    integrand = (angular_derivative(w) + comm(field.u, w))
    integrand = integrand / g.lam_eff[:, None, None, None]
    psi = np.zeros_like(field.u)
    steps = 0.5 * g.dr * (integrand[1:] + integrand[:-1])
    np.cumsum(steps, axis=0, out=psi[1:])
    return field.group.project_algebra(psi)


def gradient_components(field: RadialGaugeField) -> tuple[np.ndarray, np.ndarray]:
    """(dr-component, dt-component) of the descent direction d^* F.

    dr-component: lam^-1 (d_t w + [u, w]); dt-component: -lam d_r w.
    """
    g = field.grid
    w = curvature_density(field)
    grad_r = (angular_derivative(w) + comm(field.u, w)) / g.lam_eff[:, None, None, None]
    grad_t = -g.lam[:, None, None, None] * radial_derivative(g, w)
    return grad_r, grad_t


def grad_norm(field: RadialGaugeField) -> float:
    """L2 norm of the full gradient one-form (both chart components)."""
    g = field.grid
    grad_r, grad_t = gradient_components(field)
    dens = (g.lam_eff[:, None] * _norm2(grad_r)
            + _norm2(grad_t) / g.lam_eff[:, None])
    total = float(np.sum(g.w_r[:, None] * dens) * g.dt)
    return float(np.sqrt(max(total, 0.0)))


# ---------------------------------------------------------------------------
# gauge action and random data
# ---------------------------------------------------------------------------


def gauge_transform_loopwise(field: RadialGaugeField, g: GroupLoop) -> RadialGaugeField:
    """Residual (r-independent) gauge action u -> g^-1 u g + g^-1 d_t g.

    The energy is exactly invariant (the curvature transforms by pointwise
    conjugation); the holonomy loop transforms as x -> g(0)^-1 x g.  For a
    nonconstant g the pole row picks up g^-1 d_t g, so the result is marked
    unpinned.
    """
    if g.group is not field.group:
        raise GroupMismatchError(f"{g.group.name} vs {field.group.name}")
    if g.n_t != field.grid.n_t:
        raise ValueError("gauge loop sample count must match the grid")
    gm = g.samples
    gi = np.conj(np.swapaxes(gm, -1, -2))
    dg = spectral_derivative(gm, axis=0)
    inhom = field.group.project_algebra(gi @ dg)
    u = gi[None] @ field.u @ gm[None] + inhom[None]
    u = field.group.project_algebra(u)
    constant = bool(np.max(np.abs(gm - gm[0])) < 1e-13)
    return RadialGaugeField(field.grid, field.group, u,
                            pinned=field.pinned and constant, check=False)


def geodesic_generator(group, class_label: int) -> AlgebraElement:
    """Canonical closed-geodesic generator for a class label: i*n for U(1),
    k*diag(i, -i) for SU(2) (k >= 0)."""
    g = get_group(group)
    if g.name == "U1":
        return AlgebraElement(g, np.array([[1j * class_label]]), check=False)
    if g.name == "SU2":
        if class_label < 0:
            raise ValueError("SU(2) class label must be a nonnegative integer")
        return AlgebraElement(
            g, class_label * np.diag([1j, -1j]), check=False)
    raise GroupMismatchError(f"no geodesic generators for {g.name}")


def random_connection(grid: SphereGrid, group, seed: int, class_label: int = 0,
                      smoothness: float = 1.5, amplitude: float = 0.1,
                      ) -> RadialGaugeField:
    """Seeded random valid connection: closure-projected low-mode loop part
    around the class geodesic plus a smooth bump field vanishing at the
    poles.  Bit-reproducible for a fixed seed."""
    g = get_group(group)
    rng = np.random.default_rng(seed)
    eta = geodesic_generator(g, class_label)
    n_modes = max(1, min(6, grid.n_t // 4))
    t = grid.t
    xi = np.broadcast_to(eta.mat, (grid.n_t, g.n, g.n)).copy()
    # normalize mode draws so the sup-norm of the perturbation tracks the
    # requested amplitude (and the closure Newton stays in its basin)
    norm = 3.0 * np.sqrt(float(g.dim))
    if amplitude > 0.0:
        for k in range(1, n_modes + 1):
            decay = amplitude * k ** (-smoothness) / norm
            ca = g.from_coeffs(decay * rng.standard_normal(g.dim))
            cb = g.from_coeffs(decay * rng.standard_normal(g.dim))
            xi = xi + np.cos(k * t)[:, None, None] * ca \
                     + np.sin(k * t)[:, None, None] * cb
        xi = close_xi_smooth(g, xi, grid.dt)
    m = np.zeros((grid.n_r + 1, grid.n_t, g.n, g.n), dtype=complex)
    if amplitude > 0.0:
        n_rad = max(1, min(5, grid.n_r // 4))
        for p in range(1, n_rad + 1):
            # sin^2(r) sin(p r): vanishes at both poles with d_r m = O(lam * r),
            # so the curvature density stays bounded there
            rad = np.sin(grid.r) ** 2 * np.sin(p * grid.r) * p ** (-smoothness - 1.0)
            for k in range(0, n_modes + 1):
                decay = amplitude * (1.0 + k) ** (-smoothness) / norm
                ca = g.from_coeffs(decay * rng.standard_normal(g.dim))
                prof = np.cos(k * t) if k else np.ones_like(t)
                m += rad[:, None, None, None] * prof[None, :, None, None] * ca
                if k:
                    cb = g.from_coeffs(decay * rng.standard_normal(g.dim))
                    m += (rad[:, None, None, None]
                          * np.sin(k * t)[None, :, None, None] * cb)
        m[0] = 0.0
        m[-1] = 0.0
    return build_connection(grid, g, xi, m, tol_closure=1e-8)
