"""Exception types raised by the library."""


class QuasiWienerError(Exception):
    """Base class for all library errors."""


class DimensionError(QuasiWienerError, ValueError):
    """Operands live in spaces of different dimension."""


class SingularLatticeError(QuasiWienerError, ValueError):
    """A lattice basis is singular or too badly conditioned to invert."""


class EnumerationCapError(QuasiWienerError, RuntimeError):
    """Point enumeration would exceed the configured cap."""


class WindowError(QuasiWienerError, ValueError):
    """A truncation window is too small for the requested accuracy.

    ``required_radius`` carries the radius that would suffice, when known.
    """

    def __init__(self, message, required_radius=None):
        super().__init__(message)
        self.required_radius = required_radius


class DomainGuardError(QuasiWienerError, ValueError):
    """A symbol was applied outside the region where it is holomorphic."""

    def __init__(self, message, offending_value=None):
        super().__init__(message)
        self.offending_value = offending_value


class CertificationError(QuasiWienerError, RuntimeError):
    """A numerical construction could not be certified to the requested tolerance."""


class BoundViolation(QuasiWienerError, AssertionError):
    """A proven inequality failed numerically, which signals a bug or bad input."""


class DetectionFailure(QuasiWienerError):
    """No finite union of lattice cosets explains a point set.

    This is a legitimate outcome for inputs without lattice structure, such
    as random or noisy point sets. The attributes describe how far the search
    got.
    """

    def __init__(self, message, cosets=(), unexplained=0, total=0):
        super().__init__(message)
        self.cosets = list(cosets)
        self.unexplained = unexplained
        self.total = total
