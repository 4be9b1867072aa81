class PolypenError(Exception):
    """Base class for every error raised by the solver library."""


class ValidationError(PolypenError, ValueError):
    """
    Raised when problem data or parameters are malformed.

    Attributes:
      field: Name of the offending input (e.g. "A", "x1", "m").
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalError(PolypenError, ArithmeticError):
    """Raised when a computation leaves the range where its result is meaningful."""


class FixedPointOverflow(NumericalError):
    """A fixed-point value left the representable range of its format."""

    def __init__(self, value: float, word_bits: int):
        super().__init__(f"fixed-point overflow: {value!r} exceeds {word_bits}-bit word")
        self.value = value
        self.word_bits = word_bits


class NonPolynomialOperation(PolypenError, TypeError):
    """An arithmetic tape was asked for something other than add, subtract or multiply."""
