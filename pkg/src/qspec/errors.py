"""Exception types shared across the package."""


class QSpecError(Exception):
    """Base class for all package errors."""


class RangeError(QSpecError, ValueError):
    """An input lies outside the domain on which a formula is valid."""


class UnsupportedDomainError(QSpecError, ValueError):
    """The requested operation has no implementation for this domain kind."""


class DegenerateDomainError(QSpecError, RuntimeError):
    """Sampling or rasterization found no points inside the domain."""


class NonFiniteIntegrandError(QSpecError, FloatingPointError):
    """An integrand returned inf or nan at a sample point."""

    def __init__(self, point, value):
        self.point = point
        self.value = value
        super().__init__(f"integrand is not finite ({value!r}) at x = {list(map(float, point))}")


class SingularPointError(QSpecError, ValueError):
    """A map derivative was requested at a point where it does not exist."""


class UninformativeFitError(QSpecError, ValueError):
    """The sample set does not constrain the fitted quantity."""
