"""Matrix Lie groups U(1) and SU(2): exact-structure algebra arithmetic,
exponential/logarithm, and sampled loops with spectral differentiation.

Conventions used throughout the package:

* the inner product on the algebra is ``<X, Y> = -Re tr(XY)``, with u(1)
  embedded as 1x1 anti-Hermitian matrices (so ``<in, in> = n**2``);
* loops are parametrized over [0, 2*pi) on a uniform grid ``t_j = 2*pi*j/N``
  with N a power of two, so periodic derivatives are spectral;
* a based loop has ``x(0) = identity``.
"""

from __future__ import annotations

import numpy as np

from .errors import CutLocusError, GroupMismatchError

UNITARITY_TOL = 1e-12
CUT_LOCUS_TOL = 1e-6


class GroupSpec:
    """Immutable description of one supported structure group."""

    def __init__(self, name: str, n: int, basis: np.ndarray):
        self.name = name
        self.n = n
        self.basis = basis  # (dim, n, n), orthonormal for -Re tr(XY)
        self.dim = basis.shape[0]
        self.basis.setflags(write=False)
        # ad(e_a) expressed in the orthonormal basis, used by Hessians.
        ad = np.zeros((self.dim, self.dim, self.dim))
        for a in range(self.dim):
            for b in range(self.dim):
                com = basis[a] @ basis[b] - basis[b] @ basis[a]
                for c in range(self.dim):
                    ad[a, c, b] = -np.real(np.trace(basis[c] @ com))
        ad.setflags(write=False)
        self.ad_basis = ad

    def __repr__(self):
        return f"GroupSpec({self.name})"

    # -- coordinates ---------------------------------------------------

    def coeffs(self, mats: np.ndarray) -> np.ndarray:
        """Orthonormal coordinates of algebra values, shape (..., dim)."""
        mats = np.asarray(mats)
        out = np.empty(mats.shape[:-2] + (self.dim,))
        for a in range(self.dim):
            out[..., a] = -np.real(
                np.einsum("...ij,ji->...", mats, self.basis[a])
            )
        return out

    def from_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        return np.tensordot(coeffs, self.basis, axes=([-1], [0]))

    def project_algebra(self, mats: np.ndarray) -> np.ndarray:
        """Nearest algebra value: anti-Hermitian part, traceless for su(2)."""
        mats = np.asarray(mats, dtype=complex)
        out = 0.5 * (mats - np.conj(np.swapaxes(mats, -1, -2)))
        if self.name == "SU2":
            tr = np.trace(out, axis1=-2, axis2=-1) / self.n
            out = out - tr[..., None, None] * np.eye(self.n)
        return out

    def random_algebra(self, rng: np.random.Generator, scale: float = 1.0):
        return self.from_coeffs(scale * rng.standard_normal(self.dim))


def _su2_basis() -> np.ndarray:
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return np.stack([1j * s1, 1j * s2, 1j * s3]) / np.sqrt(2.0)


U1 = GroupSpec("U1", 1, np.array([[[1j]]]))
SU2 = GroupSpec("SU2", 2, _su2_basis())
GROUPS = {"U1": U1, "SU2": SU2}


def get_group(name) -> GroupSpec:
    if isinstance(name, GroupSpec):
        return name
    try:
        return GROUPS[name]
    except KeyError:
        raise GroupMismatchError(f"unsupported group {name!r}") from None


def _require_same_group(x, y):
    if x.group is not y.group:
        raise GroupMismatchError(f"{x.group.name} vs {y.group.name}")


# ---------------------------------------------------------------------------
# element types
# ---------------------------------------------------------------------------


class AlgebraElement:
    """A value in the Lie algebra: anti-Hermitian n x n matrix, traceless
    for su(2)."""

    __slots__ = ("group", "mat")

    def __init__(self, group, mat, *, check: bool = True):
        self.group = get_group(group)
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (self.group.n, self.group.n):
            raise ValueError(f"expected shape {(self.group.n,) * 2}, got {mat.shape}")
        if check:
            drift = np.max(np.abs(mat + np.conj(mat.T)))
            if drift > 1e-10:
                raise ValueError(f"not anti-Hermitian (defect {drift:.2e})")
            if self.group.name == "SU2" and abs(np.trace(mat)) > 1e-10:
                raise ValueError("su(2) value must be traceless")
        mat = self.group.project_algebra(mat)
        mat.setflags(write=False)
        self.mat = mat

    @classmethod
    def zero(cls, group):
        g = get_group(group)
        return cls(g, np.zeros((g.n, g.n), dtype=complex), check=False)

    @classmethod
    def from_coeffs(cls, group, coeffs):
        g = get_group(group)
        return cls(g, g.from_coeffs(np.asarray(coeffs, dtype=float)), check=False)

    @property
    def coeffs(self) -> np.ndarray:
        return self.group.coeffs(self.mat)

    def norm(self) -> float:
        return float(np.sqrt(max(inner(self, self), 0.0)))

    def __add__(self, other):
        _require_same_group(self, other)
        return AlgebraElement(self.group, self.mat + other.mat, check=False)

    def __sub__(self, other):
        _require_same_group(self, other)
        return AlgebraElement(self.group, self.mat - other.mat, check=False)

    def __mul__(self, scalar):
        return AlgebraElement(self.group, float(scalar) * self.mat, check=False)

    __rmul__ = __mul__

    def __repr__(self):
        return f"AlgebraElement({self.group.name}, {self.mat.tolist()})"


class GroupElement:
    """A group value: unitary n x n matrix, det = 1 for SU(2).

    Re-unitarizes through the polar decomposition whenever the construction
    drift exceeds ``UNITARITY_TOL``.
    """

    __slots__ = ("group", "mat")

    def __init__(self, group, mat):
        self.group = get_group(group)
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (self.group.n, self.group.n):
            raise ValueError(f"expected shape {(self.group.n,) * 2}, got {mat.shape}")
        drift = np.max(np.abs(np.conj(mat.T) @ mat - np.eye(self.group.n)))
        if drift > UNITARITY_TOL:
            mat = _unitarize(self.group, mat)
        mat = np.array(mat)
        mat.setflags(write=False)
        self.mat = mat

    @classmethod
    def identity(cls, group):
        g = get_group(group)
        return cls(g, np.eye(g.n, dtype=complex))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, np.conj(self.mat.T))

    def __matmul__(self, other):
        _require_same_group(self, other)
        return GroupElement(self.group, self.mat @ other.mat)

    def unitarity_defect(self) -> float:
        return float(
            np.max(np.abs(np.conj(self.mat.T) @ self.mat - np.eye(self.group.n)))
        )

    def __repr__(self):
        return f"GroupElement({self.group.name}, {self.mat.tolist()})"


def _unitarize(group: GroupSpec, mats: np.ndarray) -> np.ndarray:
    """Project onto the unitary group via polar decomposition; fix the
    determinant phase for SU(2)."""
    u, _, vh = np.linalg.svd(mats)
    out = u @ vh
    if group.name == "SU2":
        det = np.linalg.det(out)
        # drift is tiny, so the phase is near zero and the root unambiguous
        out = out * (det ** -0.5)[..., None, None]
    return out


# ---------------------------------------------------------------------------
# algebra operations
# ---------------------------------------------------------------------------


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Commutator [X, Y] = XY - YX."""
    _require_same_group(x, y)
    return AlgebraElement(x.group, x.mat @ y.mat - y.mat @ x.mat, check=False)


def inner(x: AlgebraElement, y: AlgebraElement) -> float:
    """Ad-invariant inner product -Re tr(XY)."""
    _require_same_group(x, y)
    return float(-np.real(np.trace(x.mat @ y.mat)))


def exp_map(x: AlgebraElement) -> GroupElement:
    """Exponential of an algebra value; lands exactly in the group."""
    return GroupElement(x.group, exp_alg(x.group, x.mat))


def log_map(g: GroupElement) -> AlgebraElement:
    """Principal logarithm via eigendecomposition.

    Raises ``CutLocusError`` when an eigenvalue of g is within
    ``CUT_LOCUS_TOL`` of -1 (the branch point).
    """
    return AlgebraElement(g.group, log_grp(g.group, g.mat), check=False)


def exp_alg(group, mats: np.ndarray) -> np.ndarray:
    """Batched matrix exponential of algebra values (any leading shape)."""
    group = get_group(group)
    mats = np.asarray(mats, dtype=complex)
    if group.name == "U1":
        return np.exp(mats)
    if group.name == "SU2":
        # traceless anti-Hermitian X satisfies X^2 = -theta^2 I, hence
        # exp X = cos(theta) I + sinc(theta) X
        theta2 = np.real(
            mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
        )
        theta = np.sqrt(np.maximum(theta2, 0.0))
        c = np.cos(theta)
        s = np.sinc(theta / np.pi)  # sin(theta)/theta, stable at 0
        out = s[..., None, None] * mats
        out[..., 0, 0] += c
        out[..., 1, 1] += c
        return out
    # generic unitary path: diagonalize the Hermitian matrix -iX
    herm = -1j * mats
    w, v = np.linalg.eigh(herm)
    phase = np.exp(1j * w)
    return np.einsum("...ij,...j,...kj->...ik", v, phase, np.conj(v))


def log_grp(group, mats: np.ndarray) -> np.ndarray:
    """Batched principal logarithm of unitary matrices.

    Raises ``CutLocusError`` when any eigenvalue lies within
    ``CUT_LOCUS_TOL`` of -1.
    """
    group = get_group(group)
    mats = np.asarray(mats, dtype=complex)
    if group.name == "U1":
        if np.any(np.abs(mats + 1.0) < CUT_LOCUS_TOL):
            raise CutLocusError("U(1) logarithm at -1")
        return 1j * np.angle(mats)
    if group.name == "SU2":
        # g = cos(theta) I + sin(theta) V with V^2 = -I, so the
        # anti-Hermitian part is sin(theta) V and log g = theta V
        c = np.clip(0.5 * np.real(np.trace(mats, axis1=-2, axis2=-1)), -1.0, 1.0)
        theta = np.arccos(c)
        # eigenvalues are exp(+-i theta); distance to -1 is 2 cos(theta/2)
        if np.any(2.0 * np.cos(theta / 2.0) < CUT_LOCUS_TOL):
            raise CutLocusError("eigenvalue within tolerance of -1")
        anti = 0.5 * (mats - np.conj(np.swapaxes(mats, -1, -2)))
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(
                theta < 1e-8, 1.0 + theta**2 / 6.0, theta / np.sin(theta)
            )
        return group.project_algebra(factor[..., None, None] * anti)
    import scipy.linalg

    w = np.linalg.eigvals(mats)
    if np.any(np.abs(w + 1.0) < CUT_LOCUS_TOL):
        raise CutLocusError("eigenvalue within tolerance of -1")
    flat = mats.reshape(-1, mats.shape[-1], mats.shape[-1])
    out = np.stack([scipy.linalg.logm(m) for m in flat]).reshape(mats.shape)
    return group.project_algebra(out)


def unitarize(group, mats: np.ndarray) -> np.ndarray:
    """Batched polar re-projection onto the group."""
    return _unitarize(get_group(group), np.asarray(mats, dtype=complex))


def ad_action(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    """Adjoint action Ad_g X = g X g^-1."""
    _require_same_group(g, x)
    return AlgebraElement(
        g.group, g.mat @ x.mat @ np.conj(g.mat.T), check=False
    )


# ---------------------------------------------------------------------------
# loops
# ---------------------------------------------------------------------------


def _check_pow2(n: int):
    if n < 4 or (n & (n - 1)) != 0:
        raise ValueError(f"loop sample count must be a power of two >= 4, got {n}")


def spectral_wavenumbers(n: int) -> np.ndarray:
    """Derivative multipliers i*k on the 2*pi-periodic grid; the Nyquist
    mode of an even grid carries no odd derivative and is set to zero."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    ik = 1j * k
    ik[n // 2] = 0.0
    return ik


def spectral_derivative(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """d/dt along ``axis`` for 2*pi-periodic sampled data (any dtype)."""
    values = np.asarray(values)
    n = values.shape[axis]
    _check_pow2(n)
    ik = spectral_wavenumbers(n)
    shape = [1] * values.ndim
    shape[axis] = n
    fhat = np.fft.fft(values, axis=axis) * ik.reshape(shape)
    return np.fft.ifft(fhat, axis=axis)


def spectral_midpoints(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Interpolate periodic samples to the staggered grid t_j + dt/2."""
    values = np.asarray(values)
    n = values.shape[axis]
    _check_pow2(n)
    k = np.fft.fftfreq(n, d=1.0 / n)
    shift = np.exp(1j * k * np.pi / n)
    # the Nyquist mode is direction-ambiguous; the symmetric choice is the
    # real part of the shift factor
    shift[n // 2] = np.cos(np.pi * k[n // 2] / n)
    shape = [1] * values.ndim
    shape[axis] = n
    fhat = np.fft.fft(values, axis=axis) * shift.reshape(shape)
    return np.fft.ifft(fhat, axis=axis)


class GroupLoop:
    """A loop sampled at t_j = 2*pi*j/N, stored as (N, n, n) unitary
    matrices."""

    __slots__ = ("group", "samples", "based")

    def __init__(self, group, samples: np.ndarray, *, based: bool | None = None):
        self.group = get_group(group)
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 3 or samples.shape[1:] != (self.group.n, self.group.n):
            raise ValueError(f"bad loop sample shape {samples.shape}")
        _check_pow2(samples.shape[0])
        eye = np.eye(self.group.n)
        drift = np.max(
            np.abs(np.einsum("jki,jkl->jil", np.conj(samples), samples) - eye)
        )
        if drift > UNITARITY_TOL:
            samples = unitarize(self.group, samples)
        samples = np.array(samples)
        samples.setflags(write=False)
        self.samples = samples
        if based is None:
            based = bool(np.max(np.abs(samples[0] - eye)) <= 1e-9)
        if based and np.max(np.abs(samples[0] - eye)) > 1e-9:
            raise ValueError("based loop must start at the identity")
        self.based = based

    @property
    def n_t(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_t) / self.n_t

    @classmethod
    def constant(cls, group, n_t: int, element: GroupElement | None = None):
        g = get_group(group)
        mat = np.eye(g.n, dtype=complex) if element is None else element.mat
        return cls(g, np.broadcast_to(mat, (n_t, g.n, g.n)).copy())

    @classmethod
    def exponential(cls, eta: AlgebraElement, n_t: int):
        """The one-parameter loop t -> exp(t * eta)."""
        t = 2.0 * np.pi * np.arange(n_t) / n_t
        mats = exp_alg(eta.group, t[:, None, None] * eta.mat)
        return cls(eta.group, mats, based=True)

    def left_translate(self, h: GroupElement) -> "GroupLoop":
        _require_same_group(self, h)
        return GroupLoop(self.group, h.mat @ self.samples)

    def pointwise_multiply(self, other: "GroupLoop") -> "GroupLoop":
        _require_same_group(self, other)
        if self.n_t != other.n_t:
            raise ValueError("sample counts differ")
        return GroupLoop(self.group, self.samples @ other.samples)

    def __repr__(self):
        return f"GroupLoop({self.group.name}, n_t={self.n_t}, based={self.based})"


def loop_derivative(x: GroupLoop) -> np.ndarray:
    """Left logarithmic derivative nu = x^-1 d/dt x, an algebra-valued loop
    of shape (N, n, n).

    Spectral differentiation is applied entrywise, then the result is
    projected back to the algebra (the projection removes roundoff-level
    drift only, for smooth sampled loops).
    """
    dx = spectral_derivative(x.samples, axis=0)
    nu = np.einsum("jki,jkl->jil", np.conj(x.samples), dx)
    return x.group.project_algebra(nu)


def nu_coeffs(x: GroupLoop) -> np.ndarray:
    """Orthonormal-basis coordinates of loop_derivative, shape (N, dim)."""
    return x.group.coeffs(loop_derivative(x))
