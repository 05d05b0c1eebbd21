"""Media export: PNG frame directories, animated GIFs, frame strips."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from ..errors import ValidationError
from ..data.io import save_clip, to_uint8

GUTTER = 2
GUTTER_VALUE = 255


def export_media(video: np.ndarray, path: str, fmt: str = "png_dir",
                 fps: int = 8, every_k: int = 1) -> list[str]:
    """Write a (l, 3, h, w) video as the requested format; returns paths."""
    video = np.asarray(video)
    if video.ndim != 4 or video.shape[1] != 3:
        raise ValidationError(f"export_media: expected (l, 3, h, w), got {video.shape}")
    if fmt == "png_dir":
        return save_clip(path, video)
    if fmt == "gif":
        return [save_gif(video, path, fps=fps)]
    if fmt == "strip":
        return [save_strip(video, path, every_k=every_k)]
    raise ValidationError(f"export_media: unknown format {fmt!r}")


def save_gif(video: np.ndarray, path: str, fps: int = 8) -> str:
    if fps <= 0:
        raise ValidationError(f"save_gif: fps must be positive, got {fps}")
    frames = [Image.fromarray(f, mode="RGB") for f in to_uint8(video)]
    _ensure_parent(path)
    frames[0].save(path, save_all=True, append_images=frames[1:],
                   duration=int(round(1000.0 / fps)), loop=0)
    return path


def save_strip(video: np.ndarray, path: str, every_k: int = 1) -> str:
    """Horizontal strip of every k-th frame with a light gutter."""
    if every_k < 1:
        raise ValidationError(f"save_strip: every_k must be >= 1, got {every_k}")
    picks = to_uint8(video[::every_k])
    n, h, w, _ = picks.shape
    strip = np.full((h, n * w + (n - 1) * GUTTER, 3), GUTTER_VALUE, dtype=np.uint8)
    for i, frame in enumerate(picks):
        x = i * (w + GUTTER)
        strip[:, x:x + w] = frame
    _ensure_parent(path)
    Image.fromarray(strip, mode="RGB").save(path)
    return path


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ValidationError(f"unwritable path: no such directory {parent}")
