"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid hyperparameters, shapes or settings."""


class InvalidInputError(ValueError):
    """Rejected input data, e.g. a non-finite gradient."""


class HorizonExceededError(RuntimeError):
    """A fixed-horizon schedule was asked for a step past its horizon."""


class StateError(RuntimeError):
    """An optimizer state is inconsistent with the requested operation."""


class ConstructionError(RuntimeError):
    """The adversarial trajectory and the SGDM run disagree.

    This signals an implementation bug, not a failure of the bound.
    """


class BoundViolation(AssertionError):
    """A numerically audited inequality failed."""


class SlopeUndefinedError(ValueError):
    """Not enough usable points to fit a log-log slope."""


class AllRunsDivergedError(RuntimeError):
    """Every run of an algorithm diverged, so nothing can be selected."""


class ParseError(ValueError):
    """Malformed LIBSVM input, reported with 1-based line and column."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
