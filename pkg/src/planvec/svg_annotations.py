"""Parsing of vector floor-plan annotations and their rasterization.

Recognized shapes are polygons tagged with a class attribute (Wall, Stairs,
Railing, Door, Window, Column) and circles for columns. Rasterization
composites shapes in a fixed drawing order (walls first, windows last),
merges columns into walls, and dilates every window footprint with a 3x3
kernel before compositing so thin window slivers survive wall overlap.
"""

from __future__ import annotations

import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import MalformedDocument, PlanvecError, UnparseableGeometry, ZeroAreaCanvas
from .geometry import fill_circle, fill_polygon, signed_area
from .mask_io import Class

KINDS = ("wall", "stairs", "railing", "door", "window", "column")

# Compositing priority; higher numbers overwrite lower ones.
DRAW_ORDER = {"wall": 1, "column": 1, "stairs": 2, "railing": 3, "door": 4, "window": 5}

KIND_CLASS = {
    "wall": Class.WALL,
    "column": Class.WALL,  # columns are semantically walls
    "stairs": Class.STAIRS,
    "railing": Class.RAILING,
    "door": Class.DOOR,
    "window": Class.WINDOW,
}

DEFAULT_KIND_MAP = {kind.capitalize(): kind for kind in KINDS}

_DILATE_3X3 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class AnnotatedShape:
    """Either a closed polygon (points is (N, 2)) or, for columns only, a
    circle given by center and radius."""

    kind: str
    points: np.ndarray | None = None
    center: tuple[float, float] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlanvecError(f"unknown shape kind: {self.kind!r}")
        if self.points is None and self.center is None:
            raise PlanvecError("shape needs polygon points or a circle")
        if self.center is not None and self.kind != "column":
            raise UnparseableGeometry(f"circle geometry is only valid for columns, not {self.kind}")
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
                raise UnparseableGeometry(f"{self.kind}: polygon needs at least 3 (x, y) points")
            if abs(signed_area(pts)) == 0.0:
                raise UnparseableGeometry(f"{self.kind}: polygon is degenerate (zero area)")
            if not np.isfinite(pts).all():
                raise UnparseableGeometry(f"{self.kind}: non-finite coordinates")


@dataclass(frozen=True)
class ParseResult:
    shapes: list[AnnotatedShape]
    skipped: int


def load_kind_map(path: str | os.PathLike) -> dict[str, str]:
    """Mapping config: ``attribute string=kind`` per line."""
    from .config import read_keyvalues_file

    out = {}
    for key, value in read_keyvalues_file(path).items():
        kind = value.strip().lower()
        if kind not in KINDS:
            raise PlanvecError(f"mapping {key!r} points to unknown kind {value!r}")
        out[key] = kind
    return out


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1].lower()


_TRANSFORM_RE = re.compile(r"(translate|scale)\s*\(([^)]*)\)")


def _parse_transform(text: str | None) -> tuple[float, float, float, float]:
    """Reduce translate/scale chains to (sx, sy, tx, ty)."""
    sx = sy = 1.0
    tx = ty = 0.0
    if not text:
        return sx, sy, tx, ty
    for op, args in _TRANSFORM_RE.findall(text):
        vals = [float(v) for v in re.split(r"[\s,]+", args.strip()) if v]
        if op == "translate":
            dx = vals[0] if vals else 0.0
            dy = vals[1] if len(vals) > 1 else 0.0
            tx, ty = tx + sx * dx, ty + sy * dy
        else:
            fx = vals[0] if vals else 1.0
            fy = vals[1] if len(vals) > 1 else fx
            sx, sy = sx * fx, sy * fy
    return sx, sy, tx, ty


def _compose(outer, inner):
    osx, osy, otx, oty = outer
    isx, isy, itx, ity = inner
    return osx * isx, osy * isy, otx + osx * itx, oty + osy * ity


def _apply(tf, pts: np.ndarray) -> np.ndarray:
    sx, sy, tx, ty = tf
    out = pts.astype(float).copy()
    out[:, 0] = out[:, 0] * sx + tx
    out[:, 1] = out[:, 1] * sy + ty
    return out


def _parse_points(text: str, kind: str) -> np.ndarray:
    tokens = [t for t in re.split(r"[\s,]+", text.strip()) if t]
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise UnparseableGeometry(f"{kind}: non-numeric point data") from exc
    if len(values) < 6 or len(values) % 2:
        raise UnparseableGeometry(f"{kind}: point list must hold at least 3 coordinate pairs")
    return np.array(values, dtype=float).reshape(-1, 2)


def _find_geometry(el: ET.Element, kind: str, tf) -> AnnotatedShape | None:
    tag = _local(el.tag)
    if tag == "circle":
        try:
            cx, cy = float(el.get("cx", "0")), float(el.get("cy", "0"))
            r = float(el.get("r", "0"))
        except ValueError as exc:
            raise UnparseableGeometry(f"{kind}: bad circle attributes") from exc
        if r <= 0:
            raise UnparseableGeometry(f"{kind}: circle radius must be positive")
        sx, sy, tx, ty = tf
        return AnnotatedShape(
            kind,
            center=(cx * sx + tx, cy * sy + ty),
            radius=r * abs(sx),
        )
    points_attr = el.get("points")
    if points_attr is not None:
        pts = _apply(tf, _parse_points(points_attr, kind))
        return AnnotatedShape(kind, points=pts)
    for child in el:
        child_tf = _compose(tf, _parse_transform(child.get("transform")))
        shape = _find_geometry(child, kind, child_tf)
        if shape is not None:
            return shape
    return None


def parse_annotation(document: str, kind_map: dict[str, str] | None = None) -> ParseResult:
    """Extract annotated shapes from an XML document, in document order.

    Elements carrying a class attribute that maps to no known kind are
    skipped and counted. A recognized element without usable geometry is
    also skipped.
    """
    kind_map = kind_map if kind_map is not None else DEFAULT_KIND_MAP
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, col = getattr(exc, "position", (0, 0))
        raise MalformedDocument(f"XML parse error at line {line}, column {col}: {exc.msg}") from exc

    shapes: list[AnnotatedShape] = []
    skipped = 0

    def lookup(el: ET.Element) -> str | None:
        attr = el.get("class") or el.get("id")
        if not attr:
            return None
        if attr in kind_map:
            return kind_map[attr]
        for token in attr.split():
            if token in kind_map:
                return kind_map[token]
        return ""  # classed element with no recognized kind

    def visit(el: ET.Element, tf) -> None:
        nonlocal skipped
        tf = _compose(tf, _parse_transform(el.get("transform")))
        kind = lookup(el)
        if kind:
            shape = _find_geometry(el, kind, tf)
            if shape is not None:
                shapes.append(shape)
            else:
                skipped += 1
            return
        if kind == "":
            skipped += 1
        for child in el:
            visit(child, tf)

    for child in root:
        visit(child, _parse_transform(root.get("transform")))
    return ParseResult(shapes, skipped)


def rasterize_annotations(
    shapes: list[AnnotatedShape], width: int, height: int
) -> np.ndarray:
    """Composite shapes onto an (height, width) class-ID mask.

    Shapes are painted in ascending drawing order so later classes overwrite
    earlier ones; document order is kept within one class. Geometry outside
    the canvas is clipped. Window footprints are dilated by a 3x3 kernel
    before compositing.
    """
    if width <= 0 or height <= 0:
        raise ZeroAreaCanvas(f"canvas must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=np.uint8)
    ordered = sorted(enumerate(shapes), key=lambda item: (DRAW_ORDER[item[1].kind], item[0]))
    for _, shape in ordered:
        if shape.points is not None:
            if not np.isfinite(shape.points).all():
                raise UnparseableGeometry(f"{shape.kind}: non-finite coordinates")
            cells = fill_polygon(shape.points, width, height)
        else:
            cells = fill_circle(np.asarray(shape.center), float(shape.radius), width, height)
        if shape.kind == "window":
            cells = ndimage.binary_dilation(cells, structure=_DILATE_3X3)
        mask[cells] = int(KIND_CLASS[shape.kind])
    return mask
