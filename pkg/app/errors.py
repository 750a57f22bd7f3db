"""
Exception hierarchy for the Faraday-mirror lab.

Validators in app/models raise the ValueError subclasses below; pydantic
wraps those into ValidationError at construction time. Analysis functions
that receive already-built models raise them directly.
"""


class FaradayLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidStateError(FaradayLabError, ValueError):
    """A state, Bloch vector or channel parameter violates its invariants."""


class NormalizationError(InvalidStateError):
    """A rotation axis or spinor is not unit length."""


class DimensionMismatchError(FaradayLabError, ValueError):
    """Two operands live in Hilbert spaces of different dimension."""


class IncompleteDataError(FaradayLabError, ValueError):
    """Tomography input is missing a setting or carries no shots."""


class NonInvertibleProbeError(FaradayLabError, ValueError):
    """The QPT probe state does not span the qubit-2 operator space."""


class ConsistencyError(FaradayLabError, RuntimeError):
    """An identity that must hold exactly did not (a convention bug)."""


__all__ = [
    "FaradayLabError",
    "InvalidStateError",
    "NormalizationError",
    "DimensionMismatchError",
    "IncompleteDataError",
    "NonInvertibleProbeError",
    "ConsistencyError",
]
