"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration or fixture file is missing, unparsable, or invalid."""


class NumericalFailure(RuntimeError):
    """A filter update could not be computed (e.g. singular innovation matrix)."""


class InsufficientDataError(ValueError):
    """An operation needs more samples than are currently available."""


class DegenerateInputError(ValueError):
    """An input carries no usable information (e.g. all-zero weights)."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""
