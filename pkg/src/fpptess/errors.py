"""Exception types shared across the package."""


class FpptessError(Exception):
    """Base class for all package errors."""


class InvalidParameter(FpptessError, ValueError):
    pass


class NumericFailure(FpptessError, ArithmeticError):
    """A quadrature or other numerical routine did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OutOfWindow(FpptessError, ValueError):
    """A query point lies outside the region where the sample is exact."""


class ConstructionUnsafe(FpptessError):
    """The generator window is too small to determine the requested cells."""


class CensoredResult(FpptessError):
    """A computation touched the simulation window boundary."""


class DegenerateShape(FpptessError):
    pass


class WindowTooSmall(FpptessError):
    pass
