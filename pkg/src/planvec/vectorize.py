"""Mask-to-polygon conversion: rectangle fitting, recursive splitting, and
polygon refinement.

The approximation stage works on the class-erased joint mask. Each connected
component is enclosed in its minimum-area rotated rectangle; if the fraction
of foreground pixels inside the rectangle falls below a fitting threshold the
rectangle is bisected perpendicular to its long axis and the halves are
re-processed, otherwise the rectangle's corners are emitted as a polygon.
Refinement then merges nearby vertices across polygons and removes vertices
whose adjacent edges are nearly collinear.
"""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateSplit,
    EmptyPointSet,
    MalformedDocument,
    PlanvecError,
    ZeroAreaRect,
)
from .geometry import convex_hull, ensure_ccw, fill_polygon, pixel_corner_points, signed_area
from .heatmap import Component, connected_components
from .mask_io import PALETTE, STRUCTURAL_CLASSES, Class, joint_mask, validate_mask

# Defaults for the approximation and refinement thresholds.
DEFAULT_FIT_THRESHOLD = 0.5
DEFAULT_MERGE_DISTANCE = 4.0
DEFAULT_COLLINEAR_COS = math.cos(math.radians(14.0))

# Components this small, or rectangles thinner than one pixel, are emitted
# as-is; they cannot be split meaningfully and guarantee termination.
MIN_SPLIT_PIXELS = 4
MIN_RECT_SIDE = 1.0

_TOL = 1e-9
_SNAP = 1e-9


@dataclass(frozen=True)
class RotatedRect:
    """Oriented rectangle: ``size`` is (w, h) with w >= h and ``angle`` is the
    direction of the w-axis in radians, normalized to [0, pi)."""

    center: tuple[float, float]
    size: tuple[float, float]
    angle: float

    @property
    def area(self) -> float:
        return self.size[0] * self.size[1]

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([c, s]), np.array([-s, c])

    def corners(self) -> np.ndarray:
        u, v = self.axes()
        c = np.asarray(self.center, dtype=float)
        hw, hh = self.size[0] / 2.0, self.size[1] / 2.0
        return np.array([c - hw * u - hh * v, c + hw * u - hh * v,
                         c + hw * u + hh * v, c - hw * u + hh * v])

    def local_coords(self, points: np.ndarray) -> np.ndarray:
        u, v = self.axes()
        d = np.asarray(points, dtype=float) - np.asarray(self.center)
        return np.column_stack([d @ u, d @ v])

    def contains(self, points: np.ndarray) -> np.ndarray:
        loc = self.local_coords(points)
        return (np.abs(loc[:, 0]) <= self.size[0] / 2.0 + _TOL) & (
            np.abs(loc[:, 1]) <= self.size[1] / 2.0 + _TOL
        )


@dataclass(frozen=True)
class Polygon:
    """Ordered vertex ring with an optional class tag.

    Vertices are stored counter-clockwise (positive shoelace area) with
    consecutive duplicates collapsed. ``fallback`` marks rectangles emitted
    by the minimum-size guard rather than by reaching the fitting threshold.
    """

    vertices: np.ndarray
    class_id: Class | None = None
    fallback: bool = False

    @staticmethod
    def make(vertices: np.ndarray, class_id: Class | None = None, fallback: bool = False) -> "Polygon":
        v = _collapse_duplicates(np.asarray(vertices, dtype=float))
        return Polygon(ensure_ccw(v), class_id, fallback)

    @property
    def area(self) -> float:
        return abs(signed_area(self.vertices))


PolygonSet = list[Polygon]


@dataclass(frozen=True)
class Thresholds:
    eps_u: float = DEFAULT_FIT_THRESHOLD
    eps_d: float = DEFAULT_MERGE_DISTANCE
    eps_a: float = DEFAULT_COLLINEAR_COS

    def __post_init__(self):
        if not 0 < self.eps_u <= 1:
            raise PlanvecError(f"eps_u must lie in (0, 1], got {self.eps_u}")
        if self.eps_d < 0:
            raise PlanvecError(f"eps_d must be >= 0, got {self.eps_d}")
        if not 0 <= self.eps_a <= 1:
            raise PlanvecError(f"eps_a must lie in [0, 1], got {self.eps_a}")


def _collapse_duplicates(v: np.ndarray) -> np.ndarray:
    if len(v) < 2:
        return v
    keep = [0]
    for i in range(1, len(v)):
        if not np.array_equal(v[i], v[keep[-1]]):
            keep.append(i)
    if len(keep) > 1 and np.array_equal(v[keep[-1]], v[keep[0]]):
        keep.pop()
    return v[keep]


def min_area_rect(points: np.ndarray) -> RotatedRect:
    """Minimum-area enclosing rectangle of a point set.

    One side of the optimum is collinear with a convex-hull edge, so only
    hull-edge directions are scanned. Collinear point sets yield a
    degenerate rectangle with zero height.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptyPointSet("min_area_rect of an empty point set")
    pts = pts.reshape(-1, 2)
    hull = convex_hull(pts)

    if len(hull) == 1:
        return RotatedRect((float(hull[0, 0]), float(hull[0, 1])), (0.0, 0.0), 0.0)
    if len(hull) == 2:
        d = hull[1] - hull[0]
        angle = math.atan2(d[1], d[0]) % math.pi
        center = (hull[0] + hull[1]) / 2.0
        return RotatedRect((float(center[0]), float(center[1])),
                           (float(np.hypot(*d)), 0.0), angle)

    best: tuple[float, float] | None = None  # (area, normalized angle)
    best_rect: RotatedRect | None = None
    edges = np.roll(hull, -1, axis=0) - hull
    for dx, dy in edges:
        theta = math.atan2(dy, dx) % math.pi
        c, s = math.cos(theta), math.sin(theta)
        u = hull @ np.array([c, s])
        v = hull @ np.array([-s, c])
        du, dv = u.max() - u.min(), v.max() - v.min()
        area = du * dv
        w, h, angle = du, dv, theta
        if h > w:
            w, h = h, w
            angle = (theta + math.pi / 2.0) % math.pi
        key = (area, angle)
        if best is None or key < best:
            cu, cv = (u.max() + u.min()) / 2.0, (v.max() + v.min()) / 2.0
            center = (cu * c - cv * s, cu * s + cv * c)
            best = key
            best_rect = RotatedRect(center, (w, h), angle)
    assert best_rect is not None
    return best_rect


def fitting_score(mask: np.ndarray, rect: RotatedRect) -> float:
    """Fraction of in-canvas pixels whose centers fall inside the rectangle
    that are foreground. Returns 0.0 when no pixel center is covered."""
    if rect.area <= 0:
        raise ZeroAreaRect(f"rectangle {rect} has zero area")
    mask = np.asarray(mask)
    height, width = mask.shape
    corners = rect.corners()
    x0 = max(0, int(math.floor(corners[:, 0].min() - 0.5)))
    x1 = min(width - 1, int(math.ceil(corners[:, 0].max())))
    y0 = max(0, int(math.floor(corners[:, 1].min() - 0.5)))
    y1 = min(height - 1, int(math.ceil(corners[:, 1].max())))
    if x0 > x1 or y0 > y1:
        return 0.0
    xs = np.arange(x0, x1 + 1) + 0.5
    ys = np.arange(y0, y1 + 1) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    inside = rect.contains(centers)
    n = int(inside.sum())
    if n == 0:
        return 0.0
    values = mask[y0 : y1 + 1, x0 : x1 + 1].ravel()[inside]
    return float(np.count_nonzero(values)) / n


def split_component(component: Component, rect: RotatedRect) -> tuple[Component, Component]:
    """Partition a component's pixels by bisecting the rectangle across its
    long axis through the center.

    Pixels exactly on the bisector go to the first half. When the geometric
    bisection leaves one half empty the split falls back to the population
    median along the long axis, then to an index split.
    """
    n = len(component)
    if n < 2:
        raise DegenerateSplit("cannot split a component with fewer than 2 pixels")
    centers = component.pixels.astype(float) + 0.5
    u = rect.local_coords(centers)[:, 0]

    first = u <= _TOL
    if first.all() or not first.any():
        med = float(np.median(u))
        first = u <= med
        if first.all() or not first.any():
            order = np.lexsort((component.pixels[:, 0], component.pixels[:, 1]))
            first = np.zeros(n, dtype=bool)
            first[order[: n // 2]] = True
    a = Component(component.label, component.pixels[first])
    b = Component(component.label, component.pixels[~first])
    return a, b


def _component_mask(pixels: np.ndarray) -> tuple[np.ndarray, int, int]:
    x0, y0 = pixels[:, 0].min(), pixels[:, 1].min()
    w = pixels[:, 0].max() - x0 + 1
    h = pixels[:, 1].max() - y0 + 1
    local = np.zeros((h, w), dtype=np.uint8)
    local[pixels[:, 1] - y0, pixels[:, 0] - x0] = 1
    return local, int(x0), int(y0)


def _subcomponents(pixels: np.ndarray) -> list[np.ndarray]:
    local, x0, y0 = _component_mask(pixels)
    out = []
    for comp in connected_components(local):
        out.append(comp.pixels + np.array([x0, y0], dtype=np.int64))
    return out


def approximate_polygons(joint: np.ndarray, eps_u: float = DEFAULT_FIT_THRESHOLD) -> PolygonSet:
    """Cover every foreground component of a binary mask with rotated
    rectangles whose fitting score reaches ``eps_u``.

    Rectangles are fitted to the corner points of the component's pixels so
    emitted polygons cover the full pixel area. Components at or below
    MIN_SPLIT_PIXELS pixels, and rectangles thinner than MIN_RECT_SIDE, are
    emitted unconditionally and flagged as fallbacks.
    """
    if not 0 < eps_u <= 1:
        raise PlanvecError(f"eps_u must lie in (0, 1], got {eps_u}")
    joint = np.asarray(joint)
    queue: deque[Component] = deque(connected_components(joint))
    out: PolygonSet = []
    while queue:
        comp = queue.popleft()
        rect = min_area_rect(pixel_corner_points(comp.pixels))
        if len(comp) <= MIN_SPLIT_PIXELS or min(rect.size) < MIN_RECT_SIDE:
            out.append(Polygon.make(rect.corners(), fallback=True))
            continue
        if fitting_score(joint, rect) >= eps_u:
            out.append(Polygon.make(rect.corners()))
            continue
        half_a, half_b = split_component(comp, rect)
        for half in (half_a, half_b):
            for pixels in _subcomponents(half.pixels):
                queue.append(Component(comp.label, pixels))
    return out


def refine_polygons(
    polygons: PolygonSet,
    eps_d: float = DEFAULT_MERGE_DISTANCE,
    eps_a: float = DEFAULT_COLLINEAR_COS,
) -> PolygonSet:
    """Two-phase cleanup: merge near-coincident vertices across different
    polygons to their midpoint, then drop vertices whose adjacent edges are
    within the collinearity threshold. Polygons reduced below 3 vertices are
    dropped. The operation is idempotent.
    """
    rings = [p.vertices.copy() for p in polygons]
    _merge_close_vertices(rings, eps_d)
    out: PolygonSet = []
    for ring, src in zip(rings, polygons):
        reduced = _remove_collinear(ring, eps_a)
        if reduced is not None:
            out.append(replace(src, vertices=ensure_ccw(reduced)))
    return out


def _merge_close_vertices(rings: list[np.ndarray], eps_d: float) -> None:
    """Repeatedly merge cross-polygon vertex pairs within ``eps_d`` to their
    midpoint until no such pair remains.

    Each index rebuild applies one disjoint matching, smallest distance
    first; a vertex moves at most once per rebuild. Pairs below float-noise
    scale snap to the lexicographically smaller coordinate instead of the
    midpoint so converging clusters reach exact equality.
    """
    if eps_d < 0:
        raise PlanvecError(f"eps_d must be >= 0, got {eps_d}")
    if not rings:
        return
    owner = np.concatenate([np.full(len(r), i, dtype=np.int64) for i, r in enumerate(rings)])
    local = np.concatenate([np.arange(len(r), dtype=np.int64) for r in rings])
    if len(owner) == 0:
        return
    max_passes = 1000 + 10 * len(owner)
    for _ in range(max_passes):
        coords = np.concatenate(rings)
        tree = cKDTree(coords)
        pairs = tree.query_pairs(eps_d, output_type="ndarray")
        if len(pairs) == 0:
            return
        cross = owner[pairs[:, 0]] != owner[pairs[:, 1]]
        pairs = pairs[cross]
        if len(pairs) == 0:
            return
        d = np.linalg.norm(coords[pairs[:, 0]] - coords[pairs[:, 1]], axis=1)
        moving = d > 0
        pairs, d = pairs[moving], d[moving]
        if len(pairs) == 0:
            return
        # smallest distance first; ties resolved by vertex indices
        used = np.zeros(len(owner), dtype=bool)
        for k in np.lexsort((pairs[:, 1], pairs[:, 0], d)):
            i, j = pairs[k]
            if used[i] or used[j]:
                continue
            used[i] = used[j] = True
            if d[k] <= _SNAP:
                # a canonical snap target keeps ulp-scale chains cycle-free
                a, b = coords[i], coords[j]
                mid = a.copy() if (a[0], a[1]) <= (b[0], b[1]) else b.copy()
            else:
                mid = (coords[i] + coords[j]) / 2.0
            rings[owner[i]][local[i]] = mid
            rings[owner[j]][local[j]] = mid
    raise PlanvecError("vertex merging failed to converge")


def _remove_collinear(ring: np.ndarray, eps_a: float) -> np.ndarray | None:
    verts = list(map(np.asarray, _collapse_duplicates(ring)))
    changed = True
    while changed and len(verts) >= 3:
        changed = False
        n = len(verts)
        for j in range(n):
            vi, vj, vk = verts[j - 1], verts[j], verts[(j + 1) % n]
            e1, e2 = vj - vi, vk - vj
            n1, n2 = np.linalg.norm(e1), np.linalg.norm(e2)
            if n1 == 0 or n2 == 0:
                verts.pop(j)
                changed = True
                break
            if abs(float(np.dot(e1, e2)) / (n1 * n2)) >= eps_a:
                verts.pop(j)
                changed = True
                break
    if len(verts) < 3:
        return None
    return np.array(verts)


def assign_classes(polygons: PolygonSet, mask: np.ndarray) -> PolygonSet:
    """Tag each polygon with the majority structural class of the mask pixels
    inside it; ties go to the lower class ID, and polygons covering no
    foreground are dropped."""
    mask = validate_mask(mask)
    height, width = mask.shape
    out: PolygonSet = []
    for poly in polygons:
        inside = fill_polygon(poly.vertices, width, height)
        counts = np.bincount(mask[inside].ravel(), minlength=8)
        counts[0] = 0
        if counts.sum() == 0:
            continue
        out.append(replace(poly, class_id=Class(int(counts.argmax()))))
    return out


def vectorize_mask(mask: np.ndarray, thresholds: Thresholds | None = None) -> PolygonSet:
    """Full pipeline: joint mask over all structural classes, rectangle
    approximation, class assignment, refinement."""
    thresholds = thresholds or Thresholds()
    mask = validate_mask(mask)
    if not mask.any():
        return []
    joint = joint_mask(mask, STRUCTURAL_CLASSES)
    approx = approximate_polygons(joint, thresholds.eps_u)
    tagged = assign_classes(approx, mask)
    return refine_polygons(tagged, thresholds.eps_d, thresholds.eps_a)


def write_polygons(path: str | os.PathLike, polygons: PolygonSet) -> None:
    """Line-oriented text format: ``class_id n x1 y1 ... xn yn`` with fixed
    2-decimal coordinates. Untagged polygons are written with class 0."""
    lines = []
    for poly in polygons:
        cid = int(poly.class_id) if poly.class_id is not None else 0
        coords = " ".join(f"{v:.2f}" for v in poly.vertices.ravel())
        lines.append(f"{cid} {len(poly.vertices)} {coords}")
    data = ("\n".join(lines) + "\n") if lines else ""
    _atomic_write_text(path, data)


def read_polygons(path: str | os.PathLike) -> PolygonSet:
    out: PolygonSet = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                tokens = line.split()
                cid, n = int(tokens[0]), int(tokens[1])
                coords = np.array([float(t) for t in tokens[2:]], dtype=float)
                if len(coords) != 2 * n:
                    raise ValueError(f"expected {2 * n} coordinates, got {len(coords)}")
                cls = Class(cid) if cid != 0 else None
                out.append(Polygon.make(coords.reshape(n, 2), cls))
            except (ValueError, IndexError) as exc:
                raise MalformedDocument(f"{path}:{lineno}: bad polygon record: {exc}") from exc
    return out


def polygons_to_geojson(polygons: PolygonSet) -> dict:
    """Feature-per-polygon document with the class name as a property."""
    features = []
    for poly in polygons:
        ring = [[round(float(x), 2), round(float(y), 2)] for x, y in poly.vertices]
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {
                    "class_id": int(poly.class_id) if poly.class_id is not None else 0,
                    "class_name": next(
                        info.name for info in PALETTE if info.id == poly.class_id
                    )
                    if poly.class_id is not None
                    else "Unassigned",
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(path: str | os.PathLike, polygons: PolygonSet) -> None:
    _atomic_write_text(path, json.dumps(polygons_to_geojson(polygons), indent=2) + "\n")


def _atomic_write_text(path: str | os.PathLike, data: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
