"""Seeded geometric augmentation of image/mask pairs.

The same transform sequence, sampled deterministically from the seed, is
applied to both grids. Masks are resampled with nearest-neighbor only so no
new class IDs can appear; images use bilinear interpolation when scaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyCrop, PlanvecError

FLIP_KINDS = frozenset({"horizontal", "vertical"})
ROTATION_ANGLES = frozenset({90, 180, 270})


@dataclass(frozen=True)
class AugmentSpec:
    flips: frozenset[str] = frozenset()
    rotations: frozenset[int] = frozenset()
    crop: tuple[float, float] | None = None  # fraction range per dimension
    scale: tuple[float, float] | None = None  # factor range
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "flips", frozenset(self.flips))
        object.__setattr__(self, "rotations", frozenset(int(r) for r in self.rotations))
        if not self.flips <= FLIP_KINDS:
            raise PlanvecError(f"unknown flips: {sorted(self.flips - FLIP_KINDS)}")
        if not self.rotations <= ROTATION_ANGLES:
            raise PlanvecError(f"rotations must be multiples of 90 in {sorted(ROTATION_ANGLES)}")
        if self.crop is not None:
            lo, hi = self.crop
            if not (0 < lo <= hi <= 1):
                raise PlanvecError(f"crop fractions must satisfy 0 < lo <= hi <= 1, got {self.crop}")
        if self.scale is not None:
            lo, hi = self.scale
            if not (0 < lo <= hi):
                raise PlanvecError(f"scale factors must be positive, got {self.scale}")


def augment_pair(
    image: np.ndarray, mask: np.ndarray, spec: AugmentSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Apply one sampled transform sequence to an (H, W, 3) image and its
    (H, W) mask. Order: flips, rotation, crop, scale."""
    image = np.asarray(image)
    mask = np.asarray(mask)
    if image.shape[:2] != mask.shape[:2]:
        raise DimensionMismatch(f"image {image.shape[:2]} vs mask {mask.shape[:2]}")
    rng = np.random.default_rng(spec.seed)

    img, msk = image.copy(), mask.copy()
    if "horizontal" in spec.flips and rng.random() < 0.5:
        img, msk = img[:, ::-1].copy(), msk[:, ::-1].copy()
    if "vertical" in spec.flips and rng.random() < 0.5:
        img, msk = img[::-1].copy(), msk[::-1].copy()
    if spec.rotations:
        angle = int(rng.choice(sorted({0} | spec.rotations)))
        if angle:
            k = angle // 90
            img, msk = np.rot90(img, k).copy(), np.rot90(msk, k).copy()
    if spec.crop is not None:
        img, msk = _crop(img, msk, spec.crop, rng)
    if spec.scale is not None:
        img, msk = _scale(img, msk, spec.scale, rng)
    return img, msk


def _crop(img, msk, bounds, rng):
    lo, hi = bounds
    h, w = msk.shape[:2]
    ch = int(round(h * rng.uniform(lo, hi)))
    cw = int(round(w * rng.uniform(lo, hi)))
    if ch < 1 or cw < 1:
        raise EmptyCrop(f"crop of {w}x{h} by fractions in [{lo}, {hi}] is empty")
    y0 = int(rng.integers(0, h - ch + 1))
    x0 = int(rng.integers(0, w - cw + 1))
    return img[y0 : y0 + ch, x0 : x0 + cw].copy(), msk[y0 : y0 + ch, x0 : x0 + cw].copy()


def _scale(img, msk, bounds, rng):
    factor = rng.uniform(*bounds)
    h, w = msk.shape[:2]
    nh, nw = int(round(h * factor)), int(round(w * factor))
    if nh < 1 or nw < 1:
        raise EmptyCrop(f"scaling {w}x{h} by {factor:.3f} produces an empty grid")
    # nearest-neighbor indices with center alignment
    ys = np.minimum((np.floor((np.arange(nh) + 0.5) * h / nh)).astype(int), h - 1)
    xs = np.minimum((np.floor((np.arange(nw) + 0.5) * w / nw)).astype(int), w - 1)
    msk2 = msk[np.ix_(ys, xs)].copy()
    img2 = np.asarray(
        Image.fromarray(img).resize((nw, nh), resample=Image.Resampling.BILINEAR)
    )
    return img2, msk2
