"""Procedural renderer for anti-aliased moving shapes.

Frames are float32 (3, h, w) in [-1, 1]. Coverage is computed by 4x4
supersampling, which also yields the exact ground truth used by the
manifests: the alpha-weighted centroid and sqrt(total alpha) as the size
measure (matching what the evaluation detector extracts).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

# shape colors in [0, 1]; chosen to sit far from every background
PALETTE = {
    "red": (0.90, 0.10, 0.10),
    "green": (0.10, 0.80, 0.15),
    "blue": (0.15, 0.25, 0.90),
    "yellow": (0.90, 0.85, 0.10),
    "magenta": (0.85, 0.15, 0.80),
    "cyan": (0.10, 0.80, 0.85),
}

# gradient kept shallow so plain-background detection logic still holds
BACKGROUNDS = {
    "dark": ((0.08, 0.08, 0.10), (0.08, 0.08, 0.10)),
    "light": ((0.86, 0.87, 0.88), (0.86, 0.87, 0.88)),
    "gradient": ((0.20, 0.20, 0.25), (0.32, 0.32, 0.37)),
}

SUPERSAMPLE = 4


def shape_alpha(shape: str, resolution: int, cx: float, cy: float,
                size: float) -> np.ndarray:
    """Per-pixel coverage in [0, 1] of the shape at (cx, cy)."""
    ss = SUPERSAMPLE
    n = resolution * ss
    coords = (np.arange(n) + 0.5) / ss
    xs = coords[None, :]
    ys = coords[:, None]
    if shape == "circle":
        mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= size ** 2
    elif shape == "square":
        half = size * 0.8862  # matches circle area at equal "size"
        mask = (np.abs(xs - cx) <= half) & (np.abs(ys - cy) <= half)
    elif shape == "triangle":
        # equilateral, apex up, circumradius scaled to match circle area
        r = size * 1.5551
        angs = np.array([-np.pi / 2, np.pi / 6, 5 * np.pi / 6])
        vx = cx + r * np.cos(angs)
        vy = cy + r * np.sin(angs)
        pos = np.ones((n, n), dtype=bool)
        neg = np.ones((n, n), dtype=bool)
        for i in range(3):
            j = (i + 1) % 3
            cross = ((vx[j] - vx[i]) * (ys - vy[i])
                     - (vy[j] - vy[i]) * (xs - vx[i]))
            pos &= cross >= 0
            neg &= cross <= 0
        mask = pos | neg
    else:
        raise ValidationError(f"unknown shape {shape!r}")
    return mask.reshape(resolution, ss, resolution, ss).mean(axis=(1, 3))


def background(bg: str, resolution: int) -> np.ndarray:
    """(3, h, w) background in [0, 1]; vertical ramp for gradients."""
    if bg not in BACKGROUNDS:
        raise ValidationError(f"unknown background {bg!r}")
    top, bottom = (np.array(c) for c in BACKGROUNDS[bg])
    ramp = np.linspace(0.0, 1.0, resolution)[:, None]
    field = top[:, None, None] * (1.0 - ramp) + bottom[:, None, None] * ramp
    return np.broadcast_to(field, (3, resolution, resolution)).copy()


def render_frame(resolution: int, shape: str, color: str, bg: str,
                 cx: float, cy: float, size: float,
                 brightness: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Compose one frame; returns (image in [-1, 1], alpha map)."""
    if color not in PALETTE:
        raise ValidationError(f"unknown color {color!r}")
    alpha = shape_alpha(shape, resolution, cx, cy, size)
    rgb = np.array(PALETTE[color]) * brightness
    img01 = background(bg, resolution) * (1.0 - alpha) + rgb[:, None, None] * alpha
    return (img01 * 2.0 - 1.0).astype(np.float32), alpha


def alpha_stats(alpha: np.ndarray) -> tuple[float, float, float]:
    """Ground-truth (cx, cy, size) from a coverage map."""
    total = float(alpha.sum())
    if total <= 0.0:
        return float("nan"), float("nan"), 0.0
    h, w = alpha.shape
    ys = np.arange(h) + 0.5
    xs = np.arange(w) + 0.5
    cx = float((alpha.sum(axis=0) * xs).sum() / total)
    cy = float((alpha.sum(axis=1) * ys).sum() / total)
    return cx, cy, float(np.sqrt(total))
