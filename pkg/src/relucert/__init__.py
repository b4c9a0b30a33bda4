"""Certified convex input regions for ReLU classifiers."""

from .config import DEFAULT_NODE_CAP, DEFAULT_TOLERANCES, Tolerances
from .errors import (
    AlreadyUnconstrainedError,
    BoundsError,
    CapExceeded,
    DegenerateMarginError,
    DegenerateRegion,
    DimensionError,
    EmptyDataset,
    EmptyRegion,
    IncompletePatternError,
    InfeasiblePattern,
    InternalError,
    IoError,
    NonNumericError,
    NumericalError,
    ParseError,
    PatternStructureError,
    PreconditionError,
    RangeError,
    RelucertError,
    ResourceLimit,
    ShapeError,
)
from .model import (
    AffineMap,
    ForwardTrace,
    Layer,
    Network,
    affine_forms,
    forward,
    forward_batch,
    load_network,
    network_from_arrays,
    network_from_json,
    network_to_json,
    output_affine,
    pattern_of,
)
from .pattern import (
    DC,
    OFF,
    ON,
    ActivationPattern,
    LinRow,
    Polytope,
    frontier_layer,
    halfspaces,
    is_prefix_structured,
    is_subpattern,
    relax,
    supports,
)

__version__ = "0.1.0"
