"""Heat flow on loops in a compact Lie group, loop energy, and the spectral
index/nullity of the energy Hessian.

Left-trivialized identities
---------------------------
Write nu = x^-1 d_t x.  For the bi-invariant metric the Levi-Civita
derivative of a left-trivialized field x*zeta along the loop is
zeta' + [nu, zeta]/2, and the descent direction of the energy
E = (1/2) int |nu|^2 dt is x * d_t(nu): the flow

    d_s x = x * d_t(nu)

dissipates energy at rate ||d_t nu||^2.  The stepper below realizes it by
the multiplicative update x <- x exp(ds * d_t nu), which stays on the group
exactly; before trusting it, the tests check dE/ds against -||d_t nu||^2 by
finite differences.

Hessian in the exponential chart
--------------------------------
The second derivative of eps -> E(x exp(eps xi)) works out to the quadratic
form  Q(xi) = int |xi'|^2 + <xi', [nu, xi]> dt, whose symmetric operator is

    H xi = -xi'' - [nu, xi'] - (1/2) [d_t nu, xi].

(The candidate double-bracket term -(1/4)[nu, [nu, xi]] from expanding the
covariant derivative cancels against the curvature term
R(xi, nu)nu = -(1/4)[nu, [nu, xi]] of the bi-invariant metric.)  The matrix
assembled here is validated against the finite-difference Hessian of
loop_energy in the same chart; that oracle, not the formula, is the
contract.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import AmbiguousSpectrumError, CFLError, SymmetryError
from .groups import (
    AlgebraElement,
    GroupLoop,
    exp_alg,
    get_group,
    loop_derivative,
    spectral_derivative,
    spectral_wavenumbers,
)

DEFAULT_CFL = 0.2
SYMMETRY_TOL = 1e-10

PerturbationGradient = Callable[[GroupLoop], np.ndarray]


def loop_energy(x: GroupLoop) -> float:
    """E = (1/2) int_0^{2 pi} |nu|^2 dt by the periodic trapezoid rule."""
    nu = loop_derivative(x)
    dt = 2.0 * np.pi / x.n_t
    return float(0.5 * dt * np.sum(np.abs(nu) ** 2))


def geodesic_residual(x: GroupLoop) -> float:
    """sup-norm of d_t nu; zero exactly on one-parameter subgroup loops."""
    nu = loop_derivative(x)
    dnu = spectral_derivative(nu, axis=0)
    return float(np.max(np.sqrt(np.sum(np.abs(dnu) ** 2, axis=(-2, -1)))))


def is_geodesic(x: GroupLoop, tol: float = 1e-5) -> bool:
    return geodesic_residual(x) < tol


def basepoint_normalize(x: GroupLoop) -> GroupLoop:
    """Left-translate by x(0)^-1 so the loop is based."""
    x0_inv = np.conj(x.samples[0].T)
    return GroupLoop(x.group, x0_inv @ x.samples, based=True)


def heat_flow_step(x: GroupLoop, ds: float,
                   perturbation_gradient: PerturbationGradient | None = None,
                   c_cfl: float = DEFAULT_CFL) -> GroupLoop:
    """One explicit geometric Euler step x <- x exp(ds (d_t nu - grad V))."""
    dt = 2.0 * np.pi / x.n_t
    if ds > c_cfl * dt * dt + 1e-15:
        raise CFLError(f"ds = {ds:.3e} exceeds {c_cfl:.2f} * dt^2 = {c_cfl * dt * dt:.3e}")
    nu = loop_derivative(x)
    direction = spectral_derivative(nu, axis=0)
    if perturbation_gradient is not None:
        direction = direction - np.asarray(perturbation_gradient(x))
    direction = x.group.project_algebra(direction)
    step = exp_alg(x.group, ds * direction)
    return GroupLoop(x.group, x.samples @ step, based=None)


class LoopTrajectory:
    """Observables along one heat-flow run (energies nonincreasing up to
    the monotonicity budget)."""

    def __init__(self):
        self.s: list[float] = []
        self.energy: list[float] = []
        self.gradient_norm: list[float] = []
        self.loops: list[GroupLoop] = []
        self.max_energy_increase: float = 0.0
        self.final_loop: GroupLoop | None = None
        self.converged: bool = False


def heat_flow_run(x: GroupLoop, s_total: float, ds: float | None = None,
                  perturbation_gradient: PerturbationGradient | None = None,
                  *, c_cfl: float = DEFAULT_CFL, record_every: int = 50,
                  keep_loops: bool = False,
                  stop_residual: float | None = None) -> LoopTrajectory:
    dt = 2.0 * np.pi / x.n_t
    if ds is None:
        ds = c_cfl * dt * dt
    n_steps = int(np.ceil(s_total / ds))
    traj = LoopTrajectory()
    energy = loop_energy(x)
    traj.s.append(0.0)
    traj.energy.append(energy)
    traj.gradient_norm.append(geodesic_residual(x))
    if keep_loops:
        traj.loops.append(x)
    s = 0.0
    for step in range(1, n_steps + 1):
        x = heat_flow_step(x, ds, perturbation_gradient, c_cfl=c_cfl)
        s += ds
        new_energy = loop_energy(x)
        traj.max_energy_increase = max(traj.max_energy_increase, new_energy - energy)
        energy = new_energy
        if step % record_every == 0 or step == n_steps:
            res = geodesic_residual(x)
            traj.s.append(s)
            traj.energy.append(energy)
            traj.gradient_norm.append(res)
            if keep_loops:
                traj.loops.append(x)
            if stop_residual is not None and res < stop_residual:
                traj.converged = True
                break
    traj.final_loop = x
    return traj


# ---------------------------------------------------------------------------
# Hessian
# ---------------------------------------------------------------------------


def spectral_derivative_matrix(n: int) -> np.ndarray:
    """Real N x N matrix of spectral d/dt on the 2*pi-periodic grid."""
    ik = spectral_wavenumbers(n)
    eye = np.eye(n)
    d = np.real(np.fft.ifft(ik[:, None] * np.fft.fft(eye, axis=0), axis=0))
    return d


class LoopHessianMatrix:
    """Dense symmetric Hessian of the loop energy at a base loop, acting on
    left-trivialized variations in orthonormal algebra coordinates.

    Coordinate layout: index (j, a) -> j * dim + a for sample j and basis
    direction a.
    """

    def __init__(self, base: GroupLoop, matrix: np.ndarray):
        self.base = base
        self.matrix = matrix

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def loop_hessian_matrix(x: GroupLoop) -> LoopHessianMatrix:
    """Assemble H = -D^2 - ad(nu) D - (1/2) ad(d_t nu) in orthonormal
    coordinates and verify symmetry to 1e-10 (raises SymmetryError for
    under-resolved loops, whose products alias)."""
    g = x.group
    n_t, d = x.n_t, g.dim
    nu = loop_derivative(x)
    dnu = spectral_derivative(nu, axis=0)
    ad_nu = _ad_blocks(g, nu)
    ad_dnu = _ad_blocks(g, dnu)
    dmat = spectral_derivative_matrix(n_t)
    big_d = np.kron(dmat, np.eye(d))
    h = -np.kron(dmat @ dmat, np.eye(d))
    blocks = np.zeros((n_t * d, n_t * d))
    for j in range(n_t):
        blocks[j * d:(j + 1) * d, j * d:(j + 1) * d] = ad_nu[j]
    h -= blocks @ big_d
    for j in range(n_t):
        h[j * d:(j + 1) * d, j * d:(j + 1) * d] -= 0.5 * ad_dnu[j]
    asym = float(np.max(np.abs(h - h.T)))
    if asym > SYMMETRY_TOL:
        raise SymmetryError(
            f"Hessian asymmetry {asym:.2e} (loop under-resolved for N_t = {n_t})")
    return LoopHessianMatrix(x, 0.5 * (h + h.T))


def _ad_blocks(group, mats: np.ndarray) -> np.ndarray:
    """ad(X_j) as real (dim x dim) matrices in the orthonormal basis."""
    g = get_group(group)
    coeffs = g.coeffs(mats)
    return np.tensordot(coeffs, g.ad_basis, axes=([-1], [0]))


def index_nullity(x: GroupLoop, tol_zero: float | None = None,
                  hessian: LoopHessianMatrix | None = None) -> tuple[int, int]:
    """Counts of negative and near-zero Hessian eigenvalues.

    ``tol_zero`` defaults to 1e-6 times the spectral radius.  Raises
    AmbiguousSpectrumError when eigenvalues cluster at the threshold
    (within a factor of 2), since the split is then not meaningful.
    """
    h = hessian if hessian is not None else loop_hessian_matrix(x)
    eigs = h.eigenvalues()
    scale = float(np.max(np.abs(eigs))) if eigs.size else 1.0
    if tol_zero is None:
        tol_zero = 1e-6 * max(scale, 1e-30)
    mags = np.abs(eigs)
    band = (mags > 0.5 * tol_zero) & (mags < 2.0 * tol_zero)
    if np.any(band):
        raise AmbiguousSpectrumError(
            f"{int(np.sum(band))} eigenvalues within a factor 2 of tol_zero = "
            f"{tol_zero:.2e}")
    index = int(np.sum(eigs < -tol_zero))
    nullity = int(np.sum(mags <= tol_zero))
    return index, nullity


# ---------------------------------------------------------------------------
# example perturbation: a smooth well around a reference loop
# ---------------------------------------------------------------------------


class LoopWell:
    """V(x) = depth * rho(d(x)^2 / width^2) with d the L2 distance to a
    reference loop and rho a compactly supported bump.  Supplies the value
    and its left-trivialized gradient for use as a flow perturbation."""

    def __init__(self, reference: GroupLoop, depth: float, width: float):
        self.reference = reference
        self.depth = depth
        self.width = width

    def _dist2(self, x: GroupLoop) -> float:
        dt = 2.0 * np.pi / x.n_t
        return float(dt * np.sum(np.abs(x.samples - self.reference.samples) ** 2))

    @staticmethod
    def _rho(s: float) -> float:
        if s >= 1.0:
            return 0.0
        return float(np.exp(1.0 - 1.0 / (1.0 - s)))

    @staticmethod
    def _drho(s: float) -> float:
        if s >= 1.0:
            return 0.0
        return float(-np.exp(1.0 - 1.0 / (1.0 - s)) / (1.0 - s) ** 2)

    def value(self, x: GroupLoop) -> float:
        return self.depth * self._rho(self._dist2(x) / self.width ** 2)

    def gradient(self, x: GroupLoop) -> np.ndarray:
        """Gradient in left-trivialized coordinates, shape (N, n, n)."""
        g = x.group
        s = self._dist2(x) / self.width ** 2
        scale = self.depth * self._drho(s) / self.width ** 2
        diff = x.samples - self.reference.samples
        # d/d eps |x e^{eps zeta} - ref|^2 = 2 Re tr((x - ref)^dagger x zeta),
        # and the representer of zeta -> Re tr(M zeta) in the -Re tr(XY)
        # metric is -proj_algebra(M)
        raw = 2.0 * np.conj(np.swapaxes(diff, -1, -2)) @ x.samples
        return -scale * g.project_algebra(raw)
