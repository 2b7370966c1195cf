"""Polygonal meshes of the test domains."""

from .core import (
    DISK_RADIUS,
    DOMAINS,
    FAMILIES,
    CellGeometry,
    MeshError,
    MeshFormatError,
    MeshGeometry,
    MeshQualityReport,
    PolygonalMesh,
    cell_geometry,
    chebyshev_radius,
    geometry,
    load_mesh,
    polygon_kernel,
    save_mesh,
    signed_area,
    validate,
)
from .generate import distort, domain_area, generate_structured, inscribed_polygon_area, polar_layout

__all__ = [
    "DISK_RADIUS",
    "DOMAINS",
    "FAMILIES",
    "CellGeometry",
    "MeshError",
    "MeshFormatError",
    "MeshGeometry",
    "MeshQualityReport",
    "PolygonalMesh",
    "cell_geometry",
    "chebyshev_radius",
    "distort",
    "domain_area",
    "generate_structured",
    "geometry",
    "inscribed_polygon_area",
    "load_mesh",
    "polar_layout",
    "polygon_kernel",
    "save_mesh",
    "signed_area",
    "validate",
]
