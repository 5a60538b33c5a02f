"""Shared error types and small argument checks."""

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class InvalidArgument(ValueError):
    """Raised when an input violates an operation's preconditions."""


class InternalError(RuntimeError):
    """Raised when a numerical self-check fails."""


def check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgument(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def check_nonnegative(name, value):
    if not np.isfinite(value) or value < 0:
        raise InvalidArgument(f"{name} must be non-negative and finite, got {value!r}")
    return float(value)
