"""Extrusion of class-tagged polygons into triangle meshes and text export.

Image coordinates (y down, pixels) become world coordinates (y up, meters):
x_world = x_px * pixel_scale, y_world = -y_px * pixel_scale, and each class
is lifted to [base, base + height] on the z axis.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SelfIntersectingPolygon
from .geometry import ear_clip, ensure_ccw, is_simple_polygon
from .mask_io import PALETTE, Class, class_by_name
from .vectorize import PolygonSet

log = logging.getLogger(__name__)

# Base elevation and extrusion height per class, meters. Stairs are rendered
# strictly taller than everything else; windows float above sill height.
DEFAULT_SPANS: dict[Class, tuple[float, float]] = {
    Class.WALL: (0.0, 2.5),
    Class.GLASS_WALL: (0.0, 2.5),
    Class.RAILING: (0.0, 1.1),
    Class.DOOR: (0.0, 2.1),
    Class.SLIDING_DOOR: (0.0, 2.1),
    Class.WINDOW: (0.9, 1.2),
    Class.STAIRS: (0.0, 3.0),
}

DEFAULT_PIXEL_SCALE = 0.01  # meters per pixel


@dataclass(frozen=True)
class HeightProfile:
    spans: dict[Class, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_SPANS))
    pixel_scale: float = DEFAULT_PIXEL_SCALE

    def __post_init__(self):
        if self.pixel_scale <= 0:
            raise ConfigError(f"pixel_scale must be > 0, got {self.pixel_scale}")
        for cls, (base, height) in self.spans.items():
            if base < 0 or height < 0:
                raise ConfigError(f"negative base/height for {Class(cls).name}")

    def span(self, cls: Class) -> tuple[float, float]:
        return self.spans.get(cls, (0.0, 2.5))


def load_profile(path: str | os.PathLike) -> HeightProfile:
    """Read a profile from key=value text: ``pixel_scale``, ``<class>.base``,
    ``<class>.height`` (class names lowercased, spaces as underscores)."""
    from .config import read_keyvalues_file

    spans = dict(DEFAULT_SPANS)
    scale = DEFAULT_PIXEL_SCALE
    for key, value in read_keyvalues_file(path).items():
        try:
            if key == "pixel_scale":
                scale = float(value)
                continue
            name, _, attr = key.partition(".")
            if attr not in ("base", "height"):
                raise ConfigError(f"unknown profile key: {key}")
            cls = class_by_name(name)
            base, height = spans.get(cls, (0.0, 2.5))
            if attr == "base":
                spans[cls] = (float(value), height)
            else:
                spans[cls] = (base, float(value))
        except ValueError as exc:
            raise ConfigError(f"bad profile value for {key}: {value!r}") from exc
    return HeightProfile(spans, scale)


@dataclass
class Mesh:
    """Triangle soup with per-class face ranges.

    ``groups`` maps a class to half-open (start, stop) ranges into ``faces``.
    """

    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64
    groups: dict[Class, list[tuple[int, int]]]

    @staticmethod
    def empty() -> "Mesh":
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), {})


def extrude(polygons: PolygonSet, profile: HeightProfile | None = None, strict: bool = False) -> Mesh:
    """Lift each polygon into a closed prism.

    Self-intersecting polygons raise in strict mode and are otherwise
    skipped with a logged warning naming the polygon index.
    """
    profile = profile or HeightProfile()
    s = profile.pixel_scale
    verts: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []
    groups: dict[Class, list[tuple[int, int]]] = {}

    for index, poly in enumerate(polygons):
        ring_px = poly.vertices
        if len(ring_px) < 3:
            continue
        if not is_simple_polygon(ring_px):
            if strict:
                raise SelfIntersectingPolygon(f"polygon {index} intersects itself")
            log.warning("skipping self-intersecting polygon %d", index)
            continue
        cls = poly.class_id if poly.class_id is not None else Class.WALL
        base, height = profile.span(cls)

        world = np.column_stack([ring_px[:, 0] * s, -ring_px[:, 1] * s])
        world = ensure_ccw(world)
        n = len(world)
        tris = ear_clip(world)

        v0 = len(verts)
        bottom = [np.array([x, y, base]) for x, y in world]
        top = [np.array([x, y, base + height]) for x, y in world]
        verts.extend(bottom)
        verts.extend(top)

        f0 = len(faces)
        # bottom cap faces down, top cap faces up
        for a, b, c in tris:
            faces.append((v0 + a, v0 + c, v0 + b))
        for a, b, c in tris:
            faces.append((v0 + n + a, v0 + n + b, v0 + n + c))
        # outward side walls, two triangles per edge
        for i in range(n):
            j = (i + 1) % n
            faces.append((v0 + i, v0 + j, v0 + n + j))
            faces.append((v0 + i, v0 + n + j, v0 + n + i))
        groups.setdefault(cls, []).append((f0, len(faces)))

    if not verts:
        return Mesh.empty()
    return Mesh(np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64), groups)


def mesh_volume(mesh: Mesh) -> float:
    """Signed volume via the divergence theorem over the triangle soup."""
    if len(mesh.faces) == 0:
        return 0.0
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    c = mesh.vertices[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _group_name(cls: Class) -> str:
    # group names may not contain spaces in the target format
    for info in PALETTE:
        if info.id == cls:
            return info.name.replace(" ", "_")
    return cls.name.title()


def export_obj(mesh: Mesh) -> bytes:
    """Serialize to Wavefront OBJ text: 4-decimal vertices, 1-based face
    indices, one named group per class. Byte-stable for identical meshes."""
    lines = ["# extruded floor-plan mesh"]
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.4f} {y:.4f} {z:.4f}")

    face_class: dict[int, Class] = {}
    for cls, ranges in mesh.groups.items():
        for start, stop in ranges:
            for f in range(start, stop):
                face_class[f] = cls
    current: Class | None = None
    for f, (a, b, c) in enumerate(mesh.faces):
        cls = face_class.get(f, Class.WALL)
        if cls != current:
            lines.append(f"g {_group_name(cls)}")
            current = cls
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_obj(path: str | os.PathLike, mesh: Mesh) -> None:
    data = export_obj(mesh)
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
