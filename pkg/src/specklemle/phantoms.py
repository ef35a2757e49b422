"""Synthetic test scenes on the 0..255 amplitude scale.

Standard grayscale test photographs are not redistributed here; the
phantom below carries flat regions, edges, a ramp and fine detail so the
reconstruction trends can be exercised without external data.
"""

from __future__ import annotations

import numpy as np


def shapes_phantom(H: int, W: int | None = None) -> np.ndarray:
    """Deterministic piecewise scene: disk, bars, bright square, ramp."""
    W = H if W is None else W
    img = np.full((H, W), 40.0)

    hh, ww = np.mgrid[0:H, 0:W]
    # large disk, upper left
    img[np.hypot(hh - 0.35 * H, ww - 0.32 * W) <= 0.22 * min(H, W)] = 200.0
    # horizontal ramp band across the bottom
    band = slice(int(0.78 * H), int(0.95 * H))
    img[band, :] = np.linspace(10.0, 250.0, W)[None, :]
    # three vertical bars
    for i, level in enumerate((90.0, 150.0, 230.0)):
        w0 = int((0.58 + 0.11 * i) * W)
        img[int(0.12 * H):int(0.48 * H), w0:w0 + max(W // 24, 1)] = level
    # small bright square for a point-like feature
    s = max(H // 16, 2)
    img[int(0.58 * H):int(0.58 * H) + s, int(0.2 * W):int(0.2 * W) + s] = 255.0
    return img
