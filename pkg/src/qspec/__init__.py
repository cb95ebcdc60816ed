"""Certified lower bounds for Neumann p-Laplace eigenvalues on quasiconformal
images of balls and cubes, with the numerical checks that back them."""

from . import bounds, constants, domains, plap_solver, qc_maps, quadrature, quasihyperbolic, verify
from ._sampling import IntegralResult, QuadratureSpec
from .errors import (DegenerateDomainError, NonFiniteIntegrandError, QSpecError, RangeError, SingularPointError,
                     UninformativeFitError, UnsupportedDomainError)

__version__ = "0.1.0"

__all__ = [
    "bounds", "constants", "domains", "plap_solver", "qc_maps", "quadrature", "quasihyperbolic", "verify",
    "IntegralResult", "QuadratureSpec", "QSpecError", "RangeError", "DegenerateDomainError",
    "NonFiniteIntegrandError", "SingularPointError", "UninformativeFitError", "UnsupportedDomainError",
]
