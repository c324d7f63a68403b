"""Exception taxonomy for the package.

Two broad families: validation errors (bad model data or out-of-domain
arguments, CLI exit code 2) and numerical failures (divergent or
non-convergent computations, CLI exit code 3).
"""


class SpinBosonError(Exception):
    """Base class for all package errors."""


class ValidationError(SpinBosonError):
    """Invalid model data, file schema, or out-of-domain argument."""


class ZeroCoupling(ValidationError):
    """The coupling profile is (numerically) identically zero."""


class BoundedDispersion(ValidationError):
    """The dispersion profile fails the unboundedness sample test."""


class NegativeEpsilon(ValidationError):
    """The atom level splitting must be strictly positive."""


class DomainError(ValidationError):
    """Evaluation requested outside the operation's spectral domain."""


class NumericalError(SpinBosonError):
    """Base class for numerical failures."""


class NonFiniteIntegrand(NumericalError):
    """An integrand evaluated to nan/inf at a quadrature node."""


class NoConvergence(NumericalError):
    """Adaptive refinement hit its node cap without converging."""


class DivergentIntegral(NoConvergence):
    """Adaptive refinement indicates a genuinely divergent integral."""


class BracketFailure(NumericalError):
    """No sign change found while bracketing a root."""


class NonPositiveDelta(NumericalError):
    """Diagonal multiplier is not positive where positivity is required."""


class NoCluster(NumericalError):
    """Refinement sequence too short or no eigenvalue clustering found."""


class IntegrabilityMismatchWarning(UserWarning):
    """Declared integrability class contradicts the dyadic refinement probe."""
