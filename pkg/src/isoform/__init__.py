"""Isothermic triangulated surfaces: self-stress verdicts, infinitesimal
deformations, Möbius transport, quad nets, and discrete minimal surfaces."""

__version__ = "0.1.0"

from .errors import (
    DegenerateRealizationError,
    ExpressionError,
    IncompatibleDataError,
    IsoformError,
    MeshTopologyError,
    SolverError,
)
from .geometry import Realization, face_geometry
from .mesh import SurfaceMesh, build_surface

__all__ = [
    "DegenerateRealizationError",
    "ExpressionError",
    "IncompatibleDataError",
    "IsoformError",
    "MeshTopologyError",
    "Realization",
    "SolverError",
    "SurfaceMesh",
    "build_surface",
    "face_geometry",
    "__version__",
]
