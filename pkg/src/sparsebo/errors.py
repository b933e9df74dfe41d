"""Exception hierarchy shared across the package."""


class SparseBOError(Exception):
    """Base class for all package errors."""


class ValidationError(SparseBOError, ValueError):
    """Invalid user input: bad shapes, empty requests, bad config values."""


class EmptyRequestError(ValidationError):
    pass


class BoundsError(ValidationError):
    """A value lies outside its dimension's bounds."""


class DecompositionError(ValidationError):
    """The space has no software or no hardware dimensions."""


class ShapeError(ValidationError):
    pass


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class DegenerateDataError(ValidationError):
    pass


class NumericalError(SparseBOError, ArithmeticError):
    """A factorization failed even after the maximum jitter."""


class ReferencePointError(ValidationError):
    pass


class NormalizationError(ValidationError):
    pass


class ConfigError(ValidationError):
    """Config file problem; message starts with the dotted path to the field."""


class TableParseError(ValidationError):
    pass


class TableLookupError(SparseBOError, LookupError):
    pass


class EvaluationError(SparseBOError, RuntimeError):
    """An evaluator backend failed on a candidate."""
