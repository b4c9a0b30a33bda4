"""Exception types shared across the package."""


class RelucertError(Exception):
    """Base class for all package-specific errors."""


class ParseError(RelucertError):
    """Malformed input file or inline value."""


class ShapeError(RelucertError):
    """Matrix/vector dimensions are inconsistent."""


class BoundsError(RelucertError):
    """Missing or invalid input box."""


class DimensionError(RelucertError):
    """Vector length does not match the network's input dimension."""


class PatternStructureError(RelucertError):
    """Operation requires a prefix-structured activation pattern."""


class IncompletePatternError(RelucertError):
    """Operation requires a complete activation pattern."""


class AlreadyUnconstrainedError(RelucertError):
    """Relaxation target is already dc."""


class NumericalError(RelucertError):
    """LP solver failed to produce a trustworthy result."""


class InfeasiblePattern(RelucertError):
    """Interval propagation proved the pattern has empty support."""


class ResourceLimit(RelucertError):
    """Branch-and-bound exceeded its node cap."""

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = nodes


class PreconditionError(RelucertError):
    """Caller violated a documented precondition."""


class DegenerateMarginError(RelucertError):
    """Seed input has no strict prediction margin."""


class RangeError(RelucertError):
    """Scalar parameter outside its legal range."""


class InternalError(RelucertError):
    """A guaranteed-by-construction check failed; indicates a bug."""


class EmptyRegion(RelucertError):
    """Polytope is infeasible; no box exists."""


class DegenerateRegion(RelucertError):
    """Optimal box width collapsed on some axis."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class NonNumericError(RelucertError):
    """Dataset feature column contains a non-numeric value."""


class EmptyDataset(RelucertError):
    """Dataset has no rows."""


class CapExceeded(RelucertError):
    """Enumeration size exceeds the hard cap."""


class IoError(RelucertError):
    """Output file could not be written."""
