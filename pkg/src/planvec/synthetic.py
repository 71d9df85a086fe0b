"""Seeded synthetic floor-plan masks for demos and end-to-end checks.

Plans are rectilinear: an outer wall ring with embedded windows, and
free-standing interior partition walls with door segments. Interior walls
stop short of the ring (doorway gaps), which keeps the skeleton dominated
by long straight runs the way drafted plans are.
"""

from __future__ import annotations

import numpy as np

from .mask_io import Class


def generate_plan(seed: int, width: int | None = None, height: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    width = width or int(rng.integers(160, 240))
    height = height or int(rng.integers(130, 200))
    t = int(rng.integers(3, 5))  # wall thickness
    m = 8  # outer margin
    gap = 4 * t  # doorway gap between interior walls and the ring
    mask = np.zeros((height, width), dtype=np.uint8)

    x0, x1 = m, width - m
    y0, y1 = m, height - m
    wall = int(Class.WALL)
    mask[y0:y1, x0 : x0 + t] = wall
    mask[y0:y1, x1 - t : x1] = wall
    mask[y0 : y0 + t, x0:x1] = wall
    mask[y1 - t : y1, x0:x1] = wall

    # free-standing interior partition walls
    door_len = 3 * t
    vxs: list[int] = []
    for _ in range(int(rng.integers(2, 4))):
        vx = int(rng.integers(x0 + 6 * t, x1 - 6 * t))
        if any(abs(vx - other) <= 6 * t for other in vxs):
            continue
        vy0 = y0 + t + gap
        vy1 = y1 - t - gap
        mask[vy0:vy1, vx : vx + t] = wall
        # carve a door into the run
        dy = int(rng.integers(vy0 + 2 * t, vy1 - 2 * t - door_len))
        mask[dy : dy + door_len, vx : vx + t] = int(Class.DOOR)
        vxs.append(vx)
    hys: list[int] = []
    for _ in range(int(rng.integers(1, 3))):
        hy = int(rng.integers(y0 + 6 * t, y1 - 6 * t))
        hx0 = x0 + t + gap
        hx1 = x1 - t - gap
        if any(hx0 - 2 * t <= vx <= hx1 + 2 * t for vx in vxs):
            # keep horizontal partitions clear of vertical ones
            hx1 = min((vx for vx in vxs if vx >= hx0 + 8 * t), default=hx1) - 2 * t
        if hx1 - hx0 < 10 * t or any(abs(hy - other) <= 6 * t for other in hys):
            continue
        mask[hy : hy + t, hx0:hx1] = wall
        dx = int(rng.integers(hx0 + 2 * t, hx1 - 2 * t - door_len))
        mask[hy : hy + t, dx : dx + door_len] = int(Class.DOOR)
        hys.append(hy)

    # windows embedded in the top and bottom ring walls
    win_len = 4 * t
    for wy in (y0, y1 - t):
        for _ in range(int(rng.integers(1, 4))):
            wx = int(rng.integers(x0 + 3 * t, x1 - 3 * t - win_len))
            mask[wy : wy + t, wx : wx + win_len] = int(Class.WINDOW)
    return mask


def generate_corpus(count: int, seed: int = 0) -> list[np.ndarray]:
    return [generate_plan(seed + i) for i in range(count)]
