"""Closed matrix groups between SO_n and GL_n, intrinsic torsion, and Weyl structures."""
from .errors import (
    AmbiguousCommensurability,
    DegenerateMetric,
    NotClosed,
    NotWeyl,
    OutOfRange,
    PathDependence,
    RankTolerance,
    SingularInput,
    WeylforgeError,
)

__version__ = "0.1.0"
