"""Meshing: feature geometries, graded templates, msh import, submeshes."""
from .core import (
    Mesh,
    boundary_edges,
    extract_exact_submesh,
    feature_isotropy_ratio,
    refine_uniform,
    region_area,
    signed_areas,
    structured_rectangle_mesh,
    triangle_quality,
    validate,
)
from .generator import generate_template, polygon_mesh
from .msh import parse_msh
from .shapes import (
    BOUNDARY_SHAPES,
    INTERNAL_SHAPES,
    UNIT_SQUARE,
    FeatureGeometry,
    build_layout,
    points_in_polygon,
)

__all__ = [
    "Mesh",
    "FeatureGeometry",
    "UNIT_SQUARE",
    "INTERNAL_SHAPES",
    "BOUNDARY_SHAPES",
    "boundary_edges",
    "build_layout",
    "extract_exact_submesh",
    "feature_isotropy_ratio",
    "generate_template",
    "parse_msh",
    "points_in_polygon",
    "polygon_mesh",
    "refine_uniform",
    "region_area",
    "signed_areas",
    "structured_rectangle_mesh",
    "triangle_quality",
    "validate",
]
