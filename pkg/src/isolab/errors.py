"""Exception types shared across the package."""


class IsolabError(Exception):
    """Base class for all package errors."""


class DimensionError(IsolabError):
    """Operands have incompatible shapes."""


class ArgumentError(IsolabError):
    """An argument value is outside its admissible range."""


class StructureError(IsolabError):
    """An algebraic precondition (ideal, triple system, ...) fails."""


class PreconditionError(IsolabError):
    """A documented operation precondition is violated.

    May carry a numerical witness of the violation in ``witness``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConfigError(IsolabError):
    """A configuration object violates its invariants."""


class ParseError(IsolabError):
    """An input document is malformed; ``location`` points at the problem."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
