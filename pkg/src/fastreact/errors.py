"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid problem description, grid, or command-line input."""


class AssumptionError(ValueError):
    """Initial data violate a standing assumption (positivity, nontriviality)."""


class SegregationError(AssumptionError):
    """u0 and v0 are simultaneously positive at some node."""


class NumericalFailure(RuntimeError):
    """A solver did not reach its tolerance or step budget."""


class DomainError(ValueError):
    """Argument outside the domain of a pointwise kernel."""
