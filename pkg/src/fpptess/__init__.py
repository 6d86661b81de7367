"""First-passage percolation on random tessellations.

Exact passage times and limit shapes on Poisson hyperplane tessellations,
graph FPP on planar Poisson-Voronoi tessellations, graph-ball ergodic
averages and lattice-animal tameness diagnostics.
"""

from .errors import (
    CensoredResult,
    ConstructionUnsafe,
    DegenerateShape,
    FpptessError,
    InvalidParameter,
    NumericFailure,
    OutOfWindow,
    WindowTooSmall,
)

__version__ = "0.1.0"

__all__ = [
    "CensoredResult",
    "ConstructionUnsafe",
    "DegenerateShape",
    "FpptessError",
    "InvalidParameter",
    "NumericFailure",
    "OutOfWindow",
    "WindowTooSmall",
]
