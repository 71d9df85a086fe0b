"""Class palette and conversions between color rasters and class-ID masks.

Masks are 2D numpy arrays indexed ``[row, col]`` holding class IDs 0..7,
where 0 is background. Color rasters are ``(H, W, 3)`` uint8 arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

from .errors import AmbiguousColor, EmptyClassSet, PlanvecError, UnknownColor


class Class(IntEnum):
    BACKGROUND = 0
    WALL = 1
    GLASS_WALL = 2
    RAILING = 3
    DOOR = 4
    SLIDING_DOOR = 5
    WINDOW = 6
    STAIRS = 7


@dataclass(frozen=True)
class ClassInfo:
    id: Class
    name: str
    color: tuple[int, int, int]
    is_boundary: bool
    is_opening: bool


# Background is rendered white; the structural colors are fixed.
PALETTE: tuple[ClassInfo, ...] = (
    ClassInfo(Class.BACKGROUND, "Background", (255, 255, 255), False, False),
    ClassInfo(Class.WALL, "Wall", (0, 0, 0), True, False),
    ClassInfo(Class.GLASS_WALL, "Glass wall", (230, 25, 75), True, False),
    ClassInfo(Class.RAILING, "Railing", (60, 180, 75), True, False),
    ClassInfo(Class.DOOR, "Door", (255, 225, 25), False, True),
    ClassInfo(Class.SLIDING_DOOR, "Sliding door", (0, 130, 200), False, True),
    ClassInfo(Class.WINDOW, "Window", (245, 130, 48), False, True),
    ClassInfo(Class.STAIRS, "Stairs", (70, 240, 240), False, False),
)

STRUCTURAL_CLASSES: tuple[Class, ...] = tuple(c for c in Class if c != Class.BACKGROUND)
BOUNDARY_CLASSES: tuple[Class, ...] = tuple(i.id for i in PALETTE if i.is_boundary)
OPENING_CLASSES: tuple[Class, ...] = tuple(i.id for i in PALETTE if i.is_opening)

# Maximum per-channel (Chebyshev) deviation tolerated when decoding colors.
COLOR_TOLERANCE = 8


def class_palette() -> list[ClassInfo]:
    """Return the 8 class descriptions (background first, then IDs 1..7)."""
    return list(PALETTE)


def class_by_name(name: str) -> Class:
    """Look up a class by its display name, case-insensitively.

    Underscores are treated as spaces so config keys like ``glass_wall``
    resolve too.
    """
    wanted = name.strip().lower().replace("_", " ")
    for info in PALETTE:
        if info.name.lower() == wanted:
            return info.id
    raise PlanvecError(f"unknown class name: {name!r}")


def palette_with_colors(overrides: Mapping[Class, tuple[int, int, int]]) -> list[ClassInfo]:
    """Return a palette with some colors replaced (the only supported customization)."""
    out = []
    for info in PALETTE:
        color = tuple(int(v) for v in overrides.get(info.id, info.color))
        if len(color) != 3 or any(not 0 <= v <= 255 for v in color):
            raise PlanvecError(f"invalid color override for {info.name}: {color}")
        out.append(ClassInfo(info.id, info.name, color, info.is_boundary, info.is_opening))
    return out


def _palette_lut(palette: Sequence[ClassInfo]) -> np.ndarray:
    lut = np.zeros((8, 3), dtype=np.uint8)
    for info in palette:
        lut[int(info.id)] = info.color
    return lut


def validate_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise PlanvecError(f"mask must be 2D, got shape {mask.shape}")
    if mask.size and (mask.min() < 0 or mask.max() > 7):
        raise PlanvecError("mask contains values outside the valid class range 0..7")
    return mask.astype(np.uint8, copy=False)


def decode_mask(raster: np.ndarray, palette: Sequence[ClassInfo] | None = None) -> np.ndarray:
    """Convert an ``(H, W, 3)`` color raster to an ``(H, W)`` class-ID mask.

    Each pixel must match exactly one palette color within COLOR_TOLERANCE
    per channel; an exact match wins over a merely tolerated one.

    Raises:
        UnknownColor: a pixel is near no palette color.
        AmbiguousColor: a pixel is near two or more palette colors and
            exactly matches none.
    """
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise PlanvecError(f"expected an (H, W, 3) raster, got shape {raster.shape}")
    lut = _palette_lut(palette or PALETTE)

    px = raster.astype(np.int16)
    # Chebyshev distance of every pixel to every palette entry: (8, H, W)
    dist = np.abs(px[None, :, :, :] - lut[:, None, None, :].astype(np.int16)).max(axis=3)
    exact = dist == 0
    near = dist <= COLOR_TOLERANCE
    n_exact = exact.sum(axis=0)
    n_near = near.sum(axis=0)

    bad = n_near == 0
    if bad.any():
        y, x = np.argwhere(bad)[0]
        raise UnknownColor(
            f"pixel ({x}, {y}) has color {tuple(int(v) for v in raster[y, x])}, "
            f"not within {COLOR_TOLERANCE} of any palette color"
        )
    ambiguous = (n_near > 1) & (n_exact == 0)
    if ambiguous.any():
        y, x = np.argwhere(ambiguous)[0]
        raise AmbiguousColor(
            f"pixel ({x}, {y}) with color {tuple(int(v) for v in raster[y, x])} "
            f"is within tolerance of multiple palette colors"
        )
    choice = np.where(n_exact > 0, exact.argmax(axis=0), near.argmax(axis=0))
    return choice.astype(np.uint8)


def encode_mask(mask: np.ndarray, palette: Sequence[ClassInfo] | None = None) -> np.ndarray:
    """Convert a class-ID mask back to its ``(H, W, 3)`` color raster."""
    mask = validate_mask(mask)
    lut = _palette_lut(palette or PALETTE)
    return lut[mask]


def joint_mask(mask: np.ndarray, classes: Iterable[Class]) -> np.ndarray:
    """Binary union of the given classes: 1 where the mask holds any of them."""
    mask = validate_mask(mask)
    ids = sorted({int(Class(c)) for c in classes})
    if not ids:
        raise EmptyClassSet("joint_mask requires at least one class")
    return np.isin(mask, ids).astype(np.uint8)


def read_mask(path: str | os.PathLike, palette: Sequence[ClassInfo] | None = None) -> np.ndarray:
    """Read a mask raster: either a palette-colored RGB image or a raw ID image."""
    with Image.open(path) as im:
        if im.mode in ("L", "P", "I", "I;16"):
            arr = np.asarray(im.convert("I"))
            if arr.size and arr.max() > 7:
                raise PlanvecError(f"{path}: single-channel mask has values above 7")
            return arr.astype(np.uint8)
        return decode_mask(np.asarray(im.convert("RGB")), palette)


def write_mask(
    path: str | os.PathLike,
    mask: np.ndarray,
    palette: Sequence[ClassInfo] | None = None,
    color: bool = True,
) -> None:
    """Write a mask as a lossless PNG, colored by default, raw IDs otherwise."""
    mask = validate_mask(mask)
    if color:
        im = Image.fromarray(encode_mask(mask, palette), mode="RGB")
    else:
        im = Image.fromarray(mask, mode="L")
    atomic_save_image(im, path)


def atomic_save_image(im: Image.Image, path: str | os.PathLike) -> None:
    """Save via a temp file in the target directory, then rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        im.save(tmp, format="PNG")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
