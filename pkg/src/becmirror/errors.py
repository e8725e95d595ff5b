"""Exception types shared by all modules."""


class BecMirrorError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(BecMirrorError, ValueError):
    """An input value or configuration violates a documented precondition."""


class StabilityError(BecMirrorError, RuntimeError):
    """A steady-state quantity was requested for a non-Hurwitz drift matrix."""


class NumericalError(BecMirrorError, ArithmeticError):
    """A numerical routine failed to meet its accuracy contract."""
