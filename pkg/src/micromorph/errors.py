"""Exception types shared across the package."""


class MicromorphError(Exception):
    """Base class for all package-specific errors."""


class NonSkewInput(MicromorphError):
    """A single tensor fed to axl() was not skew-symmetric within tolerance."""


class NonSkewField(MicromorphError):
    """A tensor field expected to be skew-valued was not."""


class GridMismatch(MicromorphError):
    """Two fields do not live on the same grid."""


class InadmissibleParams(MicromorphError):
    """Material parameters violate the admissibility required by the operation."""


class DomainViolation(MicromorphError):
    """A tensor outside the domain of a fourth-order tensor (e.g. non-symmetric
    input to a Sym(3)->Sym(3) map)."""


class DegenerateParams(MicromorphError):
    """A coefficient mapping hit a vanishing denominator."""


class PoissonOutOfRange(MicromorphError):
    """Poisson ratio outside (-1, 1/2)."""


class UnstableTimestep(MicromorphError):
    """Requested dt exceeds the stable-step bound of the explicit integrator."""


class SingularProblem(MicromorphError):
    """A static problem whose forcing overlaps a zero-energy mode."""


class NoConvergence(MicromorphError):
    """Iterative solver exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class UnsupportedVariant(MicromorphError):
    """The requested model variant is not handled by this operation."""
