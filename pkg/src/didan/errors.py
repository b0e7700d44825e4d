"""Exception hierarchy shared across the package.

CLI exit codes: usage errors -> 1, data/format errors -> 2,
numerical failures -> 3.
"""


class DidanError(Exception):
    """Base class for all package errors."""


class ShapeError(DidanError, ValueError):
    """Operand shapes do not conform to an operation's contract."""

    def __init__(self, op: str, detail: str):
        super().__init__(f"{op}: {detail}")
        self.op = op


class FormatError(DidanError, ValueError):
    """A binary file (feature blob, checkpoint) is malformed."""


class SchemaError(DidanError, ValueError):
    """A manifest or config violates its schema."""


class NumericalError(DidanError, ArithmeticError):
    """Training produced NaN/Inf values."""
