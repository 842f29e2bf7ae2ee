"""Exception types shared across the package.

The CLI maps these onto exit codes (see ``brownexp.cli``).
"""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConfigurationError(ValueError):
    """Invalid experiment or solver configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericError(ArithmeticError):
    """A numerical routine failed to converge or produced garbage."""


class NonTermination(RuntimeError):
    """A sampler exhausted its step budget before its stopping condition."""

    def __init__(self, message, steps=None):
        super().__init__(message)
        self.steps = steps


class Swallowed(ArithmeticError):
    """A point was absorbed into a Loewner hull before the end of the chain."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class SchemaError(ValueError):
    """Result records with incompatible schema versions."""
