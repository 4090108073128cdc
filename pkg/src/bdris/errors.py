"""Typed errors raised by the numeric routines.

Degenerate inputs (all-zero channels, empty gain vectors) and rank
deficiencies raise instead of silently returning NaN matrices.
"""


class DegenerateInputError(ValueError):
    """Input is identically zero or otherwise leaves an operation undefined."""


class SingularityError(ValueError):
    """A matrix that must be invertible (or full column rank) is not."""
