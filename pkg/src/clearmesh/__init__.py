"""clearmesh: clearance-parametric roadmaps from refined constrained
Delaunay triangulations.

Pipeline: build a constrained Delaunay triangulation of polygonal
obstacles, refine it with Steiner points so that gate widths alone decide
clearance, extract the dual roadmap graph, search it per query, and pull
the taut path (segments and radius-c arcs) through the winning channel.
"""

from .core import backend_name, compiled_available, set_backend
from .errors import (
    ClearmeshError,
    InfeasibleQueryError,
    InputError,
    InternalInvariantError,
)
from .geom import Circle, Point
from .mesh import EdgeRef, ObstacleSet, TriMesh, build_cdt
from .refine import RefineStats, find_pinch_vertices, refine

__version__ = "0.1.0"

__all__ = [
    "Circle",
    "ClearmeshError",
    "EdgeRef",
    "InfeasibleQueryError",
    "InputError",
    "InternalInvariantError",
    "ObstacleSet",
    "Point",
    "RefineStats",
    "TriMesh",
    "backend_name",
    "build_cdt",
    "compiled_available",
    "find_pinch_vertices",
    "refine",
    "set_backend",
    "__version__",
]
