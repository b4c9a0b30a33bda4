"""Numeric tolerances and resource defaults shared by the solver stack."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    tau_lp: float = 1e-7        # max constraint residual accepted at LP solutions
    tau_cx: float = 1e-6        # witness validation / ReLU-consistency slack
    delta_strict: float = 1e-6  # tightening applied to assumed strict inequalities


DEFAULT_TOLERANCES = Tolerances()

# branch-and-bound node budget before ResourceLimit is raised
DEFAULT_NODE_CAP = 1_000_000

# Frank-Wolfe loop for the log-volume box objective
FW_MAX_ITERS = 200
FW_REL_TOL = 1e-8
WIDTH_FLOOR = 1e-12       # floor inside the log objective
DEGENERATE_WIDTH = 1e-9   # below this, an axis counts as collapsed

# exhaustive 2-D cell enumeration refuses larger nets
CELL_ENUM_MAX_NEURONS = 16
