"""Opening-endpoint derivation and Gaussian heatmap targets.

For every opening class the mask is decomposed into connected components,
each component's outer contour is traced, and the two contour points at
maximal distance become the component's endpoints. Heatmaps place a value
of 1 at every endpoint and decay with squared distance over one or more
spread parameters (beta); the per-beta maps are averaged.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DimensionMismatch, EmptyClassSet, NonPositiveBeta, PlanvecError
from .geometry import convex_hull
from .mask_io import OPENING_CLASSES, Class, atomic_save_image, validate_mask

# Default and wide-spread presets for the averaged heatmaps.
DEFAULT_BETAS: tuple[float, ...] = (2.0, 10.0)
WIDE_BETAS: tuple[float, ...] = (5.0, 10.0, 40.0)

# Contributions below this value are stored as exact zeros; the evaluation
# window per endpoint is the radius where the Gaussian reaches the cutoff.
VALUE_CUTOFF = 1e-8

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)

# Moore neighborhood in clockwise order on screen (x right, y down).
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class Component:
    """A connected set of foreground pixels, stored as (N, 2) int (x, y) rows."""

    label: int
    pixels: np.ndarray

    def __len__(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True)
class Contour:
    """Closed ordered boundary path; consecutive entries are 8-neighbors."""

    points: np.ndarray


@dataclass(frozen=True)
class EndpointPair:
    a: tuple[int, int]
    b: tuple[int, int]


def connected_components(mask: np.ndarray) -> list[Component]:
    """8-connected components of a binary mask, labeled 1..n in the order of
    each component's first row-major pixel."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise PlanvecError(f"binary mask must be 2D, got shape {mask.shape}")
    labeled, n = ndimage.label(mask != 0, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    flat = labeled.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.flatnonzero(flat)
    # reversed so earlier indices win
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable")
    out = []
    for new_label, old in enumerate(order + 1, start=1):
        ys, xs = np.nonzero(labeled == old)
        pixels = np.column_stack([xs, ys]).astype(np.int64)
        out.append(Component(new_label, pixels))
    return out


def trace_contour(component: Component, shape: tuple[int, int] | None = None) -> Contour:
    """Outer boundary of a component via Moore-neighbor tracing.

    The walk is seeded at the row-major first pixel and runs clockwise on
    screen. One-pixel-wide sections are traversed in both directions, so
    points may repeat; the path is closed (last point neighbors the first).
    """
    if len(component) == 0:
        raise PlanvecError("cannot trace the contour of an empty component")
    pts = component.pixels
    if len(pts) == 1:
        return Contour(pts.copy())

    occupied = set(map(tuple, pts))
    order = np.lexsort((pts[:, 0], pts[:, 1]))  # by (y, x)
    start = tuple(pts[order[0]])
    backtrack = (start[0] - 1, start[1])  # west of start is always outside

    # The walk is deterministic in (position, backtrack), so the contour is
    # exactly the cycle of that state sequence.
    path: list[tuple[int, int]] = []
    seen: dict[tuple[tuple[int, int], tuple[int, int]], int] = {}
    current = start
    while (current, backtrack) not in seen:
        seen[(current, backtrack)] = len(path)
        path.append(current)
        dx, dy = backtrack[0] - current[0], backtrack[1] - current[1]
        k = _MOORE.index((dx, dy))
        for step in range(1, 9):
            d = _MOORE[(k + step) % 8]
            cand = (current[0] + d[0], current[1] + d[1])
            if cand in occupied:
                backtrack = (current[0] + _MOORE[(k + step - 1) % 8][0],
                             current[1] + _MOORE[(k + step - 1) % 8][1])
                current = cand
                break
    cycle_start = seen[(current, backtrack)]
    return Contour(np.array(path[cycle_start:], dtype=np.int64))


def opening_endpoints(component: Component) -> EndpointPair:
    """The two contour points at maximal Euclidean distance.

    Ties are broken by the lexicographic (y, x) order of the ordered pair,
    and a singleton component yields a coincident pair.
    """
    contour = trace_contour(component)
    pts = np.unique(contour.points, axis=0)
    if len(pts) == 1:
        p = (int(pts[0, 0]), int(pts[0, 1]))
        return EndpointPair(p, p)
    hull = convex_hull(pts).astype(np.int64)

    best_d2 = -1
    best_key = None
    best: tuple[tuple[int, int], tuple[int, int]] | None = None
    for i in range(len(hull)):
        for j in range(i + 1, len(hull)):
            dx = int(hull[i, 0] - hull[j, 0])
            dy = int(hull[i, 1] - hull[j, 1])
            d2 = dx * dx + dy * dy
            if d2 < best_d2:
                continue
            p = (int(hull[i, 0]), int(hull[i, 1]))
            q = (int(hull[j, 0]), int(hull[j, 1]))
            a, b = sorted((p, q), key=lambda t: (t[1], t[0]))
            key = (a[1], a[0], b[1], b[0])
            if d2 > best_d2 or key < best_key:
                best_d2, best_key, best = d2, key, (a, b)
    assert best is not None
    return EndpointPair(*best)


def _check_betas(betas: Iterable[float]) -> tuple[float, ...]:
    betas = tuple(float(b) for b in betas)
    if not betas:
        raise NonPositiveBeta("the beta set must not be empty")
    if any(b <= 0 for b in betas):
        raise NonPositiveBeta(f"all betas must be positive, got {betas}")
    return betas


def heatmap_single(
    endpoints: Sequence[tuple[int, int]],
    beta: float,
    width: int,
    height: int,
) -> np.ndarray:
    """Per-pixel max over endpoints of exp(-d^2 / beta^2).

    Values below VALUE_CUTOFF are stored as exact zeros and computation is
    confined to a window of radius beta * sqrt(-ln(cutoff)) per endpoint.
    """
    (beta,) = _check_betas([beta])
    out = np.zeros((height, width), dtype=np.float64)
    radius = beta * math.sqrt(-math.log(VALUE_CUTOFF))
    r2 = radius * radius
    for ex, ey in endpoints:
        x0 = max(0, int(math.ceil(ex - radius)))
        x1 = min(width - 1, int(math.floor(ex + radius)))
        y0 = max(0, int(math.ceil(ey - radius)))
        y1 = min(height - 1, int(math.floor(ey + radius)))
        if x0 > x1 or y0 > y1:
            continue
        xs = np.arange(x0, x1 + 1, dtype=np.float64) - ex
        ys = np.arange(y0, y1 + 1, dtype=np.float64) - ey
        d2 = xs[None, :] ** 2 + ys[:, None] ** 2
        patch = np.where(d2 <= r2, np.exp(-d2 / (beta * beta)), 0.0)
        np.maximum(out[y0 : y1 + 1, x0 : x1 + 1], patch, out=out[y0 : y1 + 1, x0 : x1 + 1])
    return out


def heatmap_average(
    endpoints: Sequence[tuple[int, int]],
    betas: Iterable[float],
    width: int,
    height: int,
) -> np.ndarray:
    """Mean of the single-beta heatmaps over the beta set."""
    betas = _check_betas(betas)
    out = np.zeros((height, width), dtype=np.float64)
    for beta in betas:
        out += heatmap_single(endpoints, beta, width, height)
    out /= len(betas)
    return out


def opening_heatmaps(
    mask: np.ndarray,
    betas: Iterable[float] = DEFAULT_BETAS,
) -> dict[Class, np.ndarray]:
    """Averaged endpoint heatmap for every opening class in the mask.

    Classes without any pixels map to all-zero heatmaps.
    """
    mask = validate_mask(mask)
    betas = _check_betas(betas)
    height, width = mask.shape
    out: dict[Class, np.ndarray] = {}
    for cls in OPENING_CLASSES:
        endpoints: list[tuple[int, int]] = []
        for comp in connected_components(mask == cls):
            pair = opening_endpoints(comp)
            endpoints.append(pair.a)
            if pair.b != pair.a:
                endpoints.append(pair.b)
        seen = sorted(set(endpoints), key=lambda p: (p[1], p[0]))
        out[cls] = heatmap_average(seen, betas, width, height)
    return out


def mhr_loss(
    predictions: Mapping[Class, np.ndarray],
    targets: Mapping[Class, np.ndarray],
) -> float:
    """Mean over classes of the per-pixel mean squared difference."""
    if not predictions or not targets:
        raise EmptyClassSet("loss requires at least one class")
    if set(predictions) != set(targets):
        raise DimensionMismatch(
            f"prediction classes {sorted(predictions)} differ from target classes {sorted(targets)}"
        )
    total = 0.0
    for cls in sorted(predictions):
        pred = np.asarray(predictions[cls], dtype=np.float64)
        tgt = np.asarray(targets[cls], dtype=np.float64)
        if pred.shape != tgt.shape:
            raise DimensionMismatch(
                f"class {Class(cls).name}: prediction shape {pred.shape} vs target {tgt.shape}"
            )
        total += float(np.mean((pred - tgt) ** 2))
    return total / len(predictions)


def write_heatmap(path: str | os.PathLike, values: np.ndarray, betas: Iterable[float]) -> None:
    """Store a heatmap as a 16-bit PNG plus a sidecar recording the beta set.

    Stored value = round(65535 * H); the sidecar lives at ``<path>.betas``.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.min() < 0 or values.max() > 1:
        raise PlanvecError("heatmap values must lie in [0, 1]")
    betas = _check_betas(betas)
    quantized = np.round(values * 65535.0).astype(np.uint16)
    atomic_save_image(Image.fromarray(quantized), path)
    with open(f"{os.fspath(path)}.betas", "w", encoding="utf-8") as fh:
        fh.write("betas=" + ",".join(repr(b) for b in betas) + "\n")


def read_heatmap(path: str | os.PathLike) -> tuple[np.ndarray, tuple[float, ...]]:
    with Image.open(path) as im:
        values = np.asarray(im, dtype=np.float64) / 65535.0
    with open(f"{os.fspath(path)}.betas", encoding="utf-8") as fh:
        line = fh.read().strip()
    if not line.startswith("betas="):
        raise PlanvecError(f"{path}.betas: missing betas entry")
    betas = _check_betas(float(tok) for tok in line[len("betas="):].split(","))
    return values, betas
