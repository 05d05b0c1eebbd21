"""Shared exception types.

The CLI maps these onto exit codes: validation problems exit 1,
numerical aborts exit 2.
"""


class ValidationError(ValueError):
    """Bad configuration, bad arguments, or violated preconditions."""


class ShapeMismatchError(ValidationError):
    """Operands with incompatible shapes; message carries both shapes."""


class NonFiniteError(ArithmeticError):
    """NaN or Inf encountered mid-computation; message carries the location."""


class DivergenceError(ArithmeticError):
    """Training loss ran away; message carries the step index."""
