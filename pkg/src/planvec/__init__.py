"""planvec: floor-plan mask vectorization, heatmap targets, 3D reconstruction,
and pixel-wise evaluation."""

from .augment import AugmentSpec, augment_pair
from .errors import PlanvecError
from .heatmap import (
    DEFAULT_BETAS,
    WIDE_BETAS,
    connected_components,
    heatmap_average,
    heatmap_single,
    mhr_loss,
    opening_endpoints,
    opening_heatmaps,
    trace_contour,
)
from .mask_io import (
    BOUNDARY_CLASSES,
    OPENING_CLASSES,
    STRUCTURAL_CLASSES,
    Class,
    ClassInfo,
    class_palette,
    decode_mask,
    encode_mask,
    joint_mask,
    read_mask,
    write_mask,
)
from .metrics import ConfusionMatrix, MetricReport, confusion, format_table, report
from .reconstruct3d import HeightProfile, Mesh, export_obj, extrude, mesh_volume, write_obj
from .svg_annotations import AnnotatedShape, parse_annotation, rasterize_annotations
from .vectorize import (
    Polygon,
    RotatedRect,
    Thresholds,
    approximate_polygons,
    assign_classes,
    fitting_score,
    min_area_rect,
    refine_polygons,
    vectorize_mask,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedShape",
    "AugmentSpec",
    "BOUNDARY_CLASSES",
    "Class",
    "ClassInfo",
    "ConfusionMatrix",
    "DEFAULT_BETAS",
    "HeightProfile",
    "Mesh",
    "MetricReport",
    "OPENING_CLASSES",
    "PlanvecError",
    "Polygon",
    "RotatedRect",
    "STRUCTURAL_CLASSES",
    "Thresholds",
    "WIDE_BETAS",
    "approximate_polygons",
    "assign_classes",
    "augment_pair",
    "class_palette",
    "confusion",
    "connected_components",
    "decode_mask",
    "encode_mask",
    "export_obj",
    "extrude",
    "fitting_score",
    "format_table",
    "heatmap_average",
    "heatmap_single",
    "joint_mask",
    "mesh_volume",
    "mhr_loss",
    "min_area_rect",
    "opening_endpoints",
    "opening_heatmaps",
    "parse_annotation",
    "rasterize_annotations",
    "read_mask",
    "refine_polygons",
    "report",
    "trace_contour",
    "vectorize_mask",
    "write_mask",
    "write_obj",
]
