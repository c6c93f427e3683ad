"""Exception hierarchy shared by every mixchar module."""


class MixcharError(Exception):
    """Base class for all toolkit errors."""


class InputError(MixcharError, ValueError):
    """Bad user input: malformed chain, parameters or spec file."""


class NotStochastic(InputError):
    pass


class Reducible(InputError):
    pass


class Disconnected(InputError):
    pass


class BadParams(InputError):
    pass


class NonPositiveRate(InputError):
    pass


class NotReversible(InputError):
    pass


class NegativeTime(InputError):
    pass


class BadTime(InputError):
    pass


class BadMode(InputError):
    pass


class EmptyOrFullSet(InputError):
    pass


class EmptySet(InputError):
    pass


class DomainError(InputError):
    pass


class NegativeInput(InputError):
    pass


class SupportViolation(InputError):
    pass


class NotATree(InputError):
    pass


class BadDelta(InputError):
    pass


class SpecParse(InputError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class CapExceeded(MixcharError):
    pass


class NotMixing(MixcharError):
    """A discrete-time profile never reaches the threshold (periodicity)."""

    def __init__(self, message: str, t_rel_absolute: float = float("inf")):
        super().__init__(message)
        self.t_rel_absolute = t_rel_absolute


class NumericalFailure(MixcharError):
    pass


class Singular(NumericalFailure):
    pass


class BracketViolation(NumericalFailure):
    pass
