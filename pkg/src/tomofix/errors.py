"""Exception types shared across the package."""


class TomofixError(Exception):
    """Base class for all package errors."""


class NonHermitian(TomofixError):
    """Matrix is not Hermitian within the requested tolerance."""


class NonPhysicalInput(TomofixError):
    """State has eigenvalues too negative for the requested operation."""


class NonPhysicalRecipe(TomofixError):
    """State recipe produced a matrix with negative eigenvalues."""


class SingularDesign(TomofixError):
    """Measurement design matrix is rank-deficient; the state is not identifiable."""


class DegenerateInput(TomofixError):
    """Spectrum carries no positive weight to redistribute."""


class NoConvergence(TomofixError):
    """Iteration limit reached before the convergence criterion was met."""


class DomainError(TomofixError):
    """Argument lies outside the function's domain."""


class OptimizerFailure(TomofixError):
    """Constrained optimizer could not produce a feasible point."""


class IllConditioned(TomofixError):
    """Fit design matrix is rank-deficient; reduce the number of terms."""


class SchemaError(TomofixError):
    """Count-record data does not match the expected schema."""


class UnknownProjectorLabel(TomofixError):
    """Count-record data references a projector label that cannot be resolved."""


class ConfigError(TomofixError):
    """Invalid experiment configuration."""
