"""Small 2D geometry kernel shared by the vectorization and rasterization code.

Conventions: points are (x, y); pixel (ix, iy) covers the unit square
[ix, ix+1) x [iy, iy+1) and its center sits at (ix + 0.5, iy + 0.5).
Signed areas follow the shoelace formula, so "counter-clockwise" means
positive signed area regardless of whether y points up or down on screen.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyPointSet


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace signed area of a closed ring given without the repeated endpoint."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def ensure_ccw(vertices: np.ndarray) -> np.ndarray:
    """Return the ring with positive shoelace orientation."""
    v = np.asarray(vertices, dtype=float)
    if signed_area(v) < 0:
        return v[::-1].copy()
    return v


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone-chain convex hull, counter-clockwise, collinear points dropped.

    Degenerate inputs are handled: a single point yields itself, collinear
    points yield their two extremes.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) == 0:
        raise EmptyPointSet("convex hull of an empty point set")
    if len(pts) <= 2:
        return pts
    # np.unique sorts lexicographically by (x, y) already
    def half(chain_pts):
        out: list[np.ndarray] = []
        for p in chain_pts:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all collinear
        return np.array([lower[0], lower[-1]])
    return np.array(hull)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def fill_polygon(vertices: np.ndarray, width: int, height: int) -> np.ndarray:
    """Rasterize a closed polygon onto an (height, width) boolean grid.

    A pixel is filled when its center is inside under the even-odd rule.
    """
    v = np.asarray(vertices, dtype=float)
    out = np.zeros((height, width), dtype=bool)
    if len(v) < 3 or width <= 0 or height <= 0:
        return out
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)

    ymin = max(0, int(np.floor(v[:, 1].min() - 0.5)))
    ymax = min(height - 1, int(np.ceil(v[:, 1].max())))
    centers_x = np.arange(width) + 0.5
    for iy in range(ymin, ymax + 1):
        yc = iy + 0.5
        spans = (y1 <= yc) != (y2 <= yc)
        if not spans.any():
            continue
        t = (yc - y1[spans]) / (y2[spans] - y1[spans])
        xs = np.sort(x1[spans] + t * (x2[spans] - x1[spans]))
        # center is inside iff an odd number of crossings lie to its right
        n_right = len(xs) - np.searchsorted(xs, centers_x, side="right")
        out[iy] = (n_right % 2) == 1
    return out


def fill_circle(center: np.ndarray, radius: float, width: int, height: int) -> np.ndarray:
    """Pixels whose centers lie within ``radius`` of ``center``."""
    out = np.zeros((height, width), dtype=bool)
    if width <= 0 or height <= 0 or radius <= 0:
        return out
    cx, cy = float(center[0]), float(center[1])
    ys = np.arange(height) + 0.5
    xs = np.arange(width) + 0.5
    d2 = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2
    return d2 <= radius * radius


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or improper intersection of two closed segments."""
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4:
        return True
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and _on_segment(a, b, c):
            return True
    return False


def _on_segment(a, b, p) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def is_simple_polygon(vertices: np.ndarray) -> bool:
    """True when no two non-adjacent edges touch and adjacent edges only share
    their common vertex."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a1, a2, v[j], v[(j + 1) % n]):
                return False
    return True


def ear_clip(vertices: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple polygon by ear clipping.

    Returns index triples into ``vertices``. The ring must be counter-
    clockwise; collinear vertices are skipped without emitting degenerate
    triangles, so the output holds at most ``n - 2`` triangles.
    """
    v = np.asarray(vertices, dtype=float)
    idx = list(range(len(v)))
    tris: list[tuple[int, int, int]] = []
    guard = 0
    while len(idx) > 3 and guard < 4 * len(v) ** 2:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i, j, l = idx[k - 1], idx[k], idx[(k + 1) % n]
            z = _cross(v[i], v[j], v[l])
            if z == 0:
                # straight or folded corner: drop the middle vertex outright
                idx.pop(k)
                clipped = True
                break
            if z < 0:
                continue
            if _ear_is_clear(v, idx, i, j, l):
                tris.append((i, j, l))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            # numerically stuck: clip the most convex corner anyway
            k = max(range(len(idx)), key=lambda k: _cross(v[idx[k - 1]], v[idx[k]], v[idx[(k + 1) % len(idx)]]))
            i, j, l = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            tris.append((i, j, l))
            idx.pop(k)
    if len(idx) == 3:
        i, j, l = idx
        if _cross(v[i], v[j], v[l]) != 0:
            tris.append((i, j, l))
    return tris


def _ear_is_clear(v, idx, i, j, l) -> bool:
    a, b, c = v[i], v[j], v[l]
    for m in idx:
        if m in (i, j, l):
            continue
        p = v[m]
        if _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0:
            return False
    return True


def pixel_corner_points(pixels: np.ndarray) -> np.ndarray:
    """Corner points of the unit squares covered by integer pixel coordinates."""
    px = np.asarray(pixels, dtype=np.int64)
    if px.size == 0:
        raise EmptyPointSet("no pixels")
    offs = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=np.int64)
    corners = (px[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    return np.unique(corners, axis=0).astype(float)
