"""Global numerical tolerance.

Every rank, nullspace and membership decision compares against this value,
scaled by the largest singular value of the object being tested.
"""

from contextlib import contextmanager

DEFAULT_TOLERANCE = 1e-9
DEFAULT_SEED = 0

_tolerance = DEFAULT_TOLERANCE


def get_tolerance():
    return _tolerance


def set_tolerance(value):
    global _tolerance
    value = float(value)
    if not 0 < value < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {value}")
    _tolerance = value


@contextmanager
def tolerance(value):
    """Temporarily override the global tolerance."""
    old = _tolerance
    set_tolerance(value)
    try:
        yield value
    finally:
        set_tolerance(old)


def resolve(tol):
    return _tolerance if tol is None else float(tol)
