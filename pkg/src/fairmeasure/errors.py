"""Exception types shared across the package."""


class FairmeasureError(ValueError):
    """Base class for every error raised by this package."""


class ParameterError(FairmeasureError):
    """An argument is outside its documented range or shape."""


class SizeBudgetError(FairmeasureError):
    """A requested lattice or search grid exceeds the configured budget."""


class DomainError(FairmeasureError):
    """An input leaves the mathematical domain of an operation."""


class EquivalenceViolationError(FairmeasureError):
    """A density vanishes on a block of positive base weight."""


class NoMartingaleMeasureError(FairmeasureError):
    """No branch weighting makes the process a one-step martingale."""


class IngestionError(FairmeasureError):
    """Malformed or inconsistent market-data input."""


class UnsupportedConstraintError(FairmeasureError):
    """Constraint undefined for this process shape."""


class InfeasibleError(FairmeasureError):
    """No point satisfies the requested constraint set."""


class ConfigError(FairmeasureError):
    """Invalid run configuration."""
