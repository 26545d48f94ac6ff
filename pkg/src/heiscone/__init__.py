"""Heisenberg-group cones, intrinsic graphs, and checks that flat cones give full cones."""

from .cones import ConeKind, ConeSpec, contains, contains_translated, flat_equals_full_slice
from .graphs import (
    DomainError,
    FlatIntersection,
    GraphFunction,
    NotFound,
    NotRepresentable,
    PointCloud,
    Rect,
    SurfaceGrid,
    common_domain,
    flat_intersection,
    graph_point,
    reparameterize,
    sample_graph,
    zeta,
)
from .group import ORIGIN, PlanePoint, Point, dilate, inverse, lift, product, project, rotate_z, shear
from .pipeline import PipelineGrids, PipelineReport, PipelineTols, run_theorem_pipeline
from .verifier import (
    Certificate,
    best_rotation_aperture,
    check_flat_property,
    check_full_at_base,
    check_full_property,
    check_lemma_vertical_inclusion,
    check_remark_shear_flat,
    check_shear_union_identity,
    max_flat_aperture,
)

__version__ = "0.1.0"

__all__ = [
    "ConeKind",
    "ConeSpec",
    "contains",
    "contains_translated",
    "flat_equals_full_slice",
    "DomainError",
    "FlatIntersection",
    "GraphFunction",
    "NotFound",
    "NotRepresentable",
    "PointCloud",
    "Rect",
    "SurfaceGrid",
    "common_domain",
    "flat_intersection",
    "graph_point",
    "reparameterize",
    "sample_graph",
    "zeta",
    "ORIGIN",
    "PlanePoint",
    "Point",
    "dilate",
    "inverse",
    "lift",
    "product",
    "project",
    "rotate_z",
    "shear",
    "PipelineGrids",
    "PipelineReport",
    "PipelineTols",
    "run_theorem_pipeline",
    "Certificate",
    "best_rotation_aperture",
    "check_flat_property",
    "check_full_at_base",
    "check_full_property",
    "check_lemma_vertical_inclusion",
    "check_remark_shear_flat",
    "check_shear_union_identity",
    "max_flat_aperture",
]
