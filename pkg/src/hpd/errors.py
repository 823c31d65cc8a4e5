"""Exception types shared across the package."""


class HPDError(Exception):
    """Base class for all package errors."""


class ZeroDenominator(HPDError, ZeroDivisionError):
    pass


class UnboundVariable(HPDError, KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]!r}"


class OrderMismatch(HPDError, ValueError):
    pass


class NotLaurent(HPDError, ValueError):
    """A result that must be a Laurent polynomial is a genuine fraction."""


class ChartMismatch(HPDError, ValueError):
    pass


class DegreeZero(HPDError, ValueError):
    pass


class DegreeMismatch(HPDError, ValueError):
    pass


class MissingInverse(HPDError, ValueError):
    pass


class InvalidParams(HPDError, ValueError):
    pass


class InhomogeneousBase(HPDError, ValueError):
    pass


class UnsupportedAtlas(HPDError, ValueError):
    pass


class NotACocycle(HPDError, ValueError):
    pass


class OutOfTruncation(HPDError, ValueError):
    pass


class PrerequisiteViolated(HPDError, ValueError):
    pass


class NotSurjective(HPDError, ValueError):
    pass


class UnsolvableOrder(HPDError, ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ParseError(HPDError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = message
        self.offset = offset
