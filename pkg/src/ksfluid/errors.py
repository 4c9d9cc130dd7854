"""Exception hierarchy shared across the library.

The CLI maps these onto its exit-code contract: configuration problems
exit with 2, numerical or gate failures with 1.
"""


class KsfluidError(Exception):
    """Base class for all library errors."""


class ConfigError(KsfluidError):
    """Malformed or inconsistent run configuration."""


class AdmissibilityError(KsfluidError):
    """Envelope fails its own sanity checks (positivity, monotonicity, integrals)."""


class GateError(KsfluidError):
    """A stability/regularity/activity gate refused the requested computation."""


class BudgetError(KsfluidError):
    """An operation would enumerate more node tuples than the configured budget."""


class DegenerateConfigurationError(KsfluidError):
    """Coincident particle positions where a pivot index cannot be resolved."""


class EmbeddingError(KsfluidError):
    """Nodes of a sub-box grid do not coincide with nodes of the enclosing grid."""


class ConvergenceError(KsfluidError):
    """Fixed-point iteration failed to reach the requested residual."""


class QuadratureError(KsfluidError):
    """Adaptive radial quadrature did not converge within its subdivision budget."""
