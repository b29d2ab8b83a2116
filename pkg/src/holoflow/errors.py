"""Exception types shared across the package."""


class HoloflowError(Exception):
    """Base class for all package errors."""


class GroupMismatchError(HoloflowError):
    """Operands belong to different structure groups."""


class CutLocusError(HoloflowError):
    """Logarithm requested at (or within tolerance of) the cut locus."""


class ClosureError(HoloflowError):
    """Holonomy loop fails to close: the monodromy is not the identity."""


class NewtonError(HoloflowError):
    """Closure projection did not converge within the iteration budget."""


class CFLError(HoloflowError):
    """Explicit time step exceeds the stability bound."""


class SymmetryError(HoloflowError):
    """A matrix that must be symmetric failed its symmetry check."""


class AmbiguousSpectrumError(HoloflowError):
    """Eigenvalues cluster at the zero-mode threshold; index/nullity split
    is not well defined at the requested tolerance."""


class BoundaryViolationError(HoloflowError):
    """Grid data violates a pinned boundary row condition."""


class NonTransverseLandingError(HoloflowError):
    """Cascade shooting produced a landing too close to the target locus to
    classify; the fixture must be perturbed."""


class ComplexConsistencyError(HoloflowError):
    """Assembled boundary data does not square to zero over F2."""


class TriangularityError(HoloflowError):
    """Action-ordered coupling matrix has an entry below the diagonal."""

    def __init__(self, degree, row, col, message=None):
        self.degree = degree
        self.row = row
        self.col = col
        super().__init__(
            message
            or f"degree {degree}: nonzero entry at ({row}, {col}) below the diagonal"
        )


class ConfigError(HoloflowError):
    """Invalid experiment configuration."""
