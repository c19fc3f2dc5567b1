"""
Exception hierarchy for the dilation toolkit.

Checkers never raise on a failed check; they return reports. Exceptions are
reserved for invalid input, violated structural preconditions and exceeded
resource caps.
"""


class DilationError(Exception):
    """Base class for every error raised by this package."""


class FieldMismatchError(DilationError, ValueError):
    """Two quadratic-field scalars with different square roots were combined."""


class ScalarParseError(DilationError, ValueError):
    """Text does not follow the exact scalar grammar."""


class LatticeParseError(DilationError, ValueError):
    """Text is not a valid lattice element for the dilation context."""


class DilationMismatchError(DilationError, ValueError):
    """Objects living on different lattices (line vs plane) were combined."""


class MaskError(DilationError, ValueError):
    """Invalid coefficient mask or mask file."""


class ResourceLimitError(DilationError):
    """A configured cap (support size, oracle tuples, raster depth) was exceeded."""

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: {size} exceeds cap {cap}")


class NotApplicableError(DilationError):
    """A structural precondition of an operation does not hold."""


class EigenspaceError(DilationError):
    """A 1-eigenspace expected to be one-dimensional is not."""

    def __init__(self, dimension: int, context: str = ""):
        self.dimension = dimension
        where = f" ({context})" if context else ""
        super().__init__(f"1-eigenspace has dimension {dimension}, expected 1{where}")


class TileSystemError(DilationError, ValueError):
    """Malformed tile-translate list (duplicates, wrong lattice)."""


class EmptyDataError(DilationError, ValueError):
    """Nothing to render or export."""
