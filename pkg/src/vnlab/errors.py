class VNLabError(Exception):
    """Base class for all errors raised by vnlab."""


class PreconditionError(VNLabError, ValueError):
    """An operation was called on inputs violating its precondition."""


class DimensionMismatchError(PreconditionError):
    """Matrices that should share an ambient space do not."""


class NumericalAmbiguityError(VNLabError):
    """A rank or clustering decision is too close to the tolerance to call."""
