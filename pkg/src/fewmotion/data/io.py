"""Frame-sequence IO: 8-bit RGB PNG directories <-> [-1, 1] float arrays."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from ..errors import ValidationError


def to_uint8(x: np.ndarray) -> np.ndarray:
    """[-1, 1] float (..., 3, h, w) -> uint8 (..., h, w, 3)."""
    u = np.round((np.clip(x, -1.0, 1.0) + 1.0) * 0.5 * 255.0).astype(np.uint8)
    return np.moveaxis(u, -3, -1)


def from_uint8(u: np.ndarray) -> np.ndarray:
    """uint8 (..., h, w, 3) -> float32 (..., 3, h, w) in [-1, 1]."""
    x = u.astype(np.float32) / 255.0 * 2.0 - 1.0
    return np.moveaxis(x, -1, -3)


def frame_name(i: int) -> str:
    return f"frame_{i:04d}.png"


def save_clip(directory, video: np.ndarray) -> list[str]:
    """Write frames of a (l, 3, h, w) video as frame_0000.png and on."""
    video = np.asarray(video)
    if video.ndim != 4 or video.shape[1] != 3:
        raise ValidationError(f"save_clip: expected (l, 3, h, w), got {video.shape}")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(to_uint8(video)):
        p = os.path.join(directory, frame_name(i))
        Image.fromarray(frame, mode="RGB").save(p)
        paths.append(p)
    return paths


def load_clip(directory) -> np.ndarray:
    """Read frame_0000.png.. back into a (l, 3, h, w) float32 video."""
    if not os.path.isdir(directory):
        raise ValidationError(f"load_clip: no such directory {directory}")
    names = sorted(n for n in os.listdir(directory)
                   if n.startswith("frame_") and n.endswith(".png"))
    if not names:
        raise ValidationError(f"load_clip: no frame_*.png files in {directory}")
    frames = []
    shape = None
    for i, name in enumerate(names):
        expected = frame_name(i)
        if name != expected:
            raise ValidationError(f"load_clip: missing or misnamed frame {expected} "
                                  f"(found {name}) in {directory}")
        img = Image.open(os.path.join(directory, name)).convert("RGB")
        arr = np.asarray(img)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ValidationError(f"load_clip: frame {name} has shape {arr.shape}, "
                                  f"expected {shape}")
        frames.append(arr)
    return from_uint8(np.stack(frames))


def load_image(path, resolution: int | None = None) -> np.ndarray:
    """Read one image to (3, h, w) in [-1, 1], center-cropped square and
    resized to the requested resolution when given."""
    if not os.path.isfile(path):
        raise ValidationError(f"load_image: no such file {path}")
    img = Image.open(path).convert("RGB")
    if resolution is not None:
        side = min(img.size)
        left = (img.width - side) // 2
        top = (img.height - side) // 2
        img = img.crop((left, top, left + side, top + side))
        img = img.resize((resolution, resolution), Image.BILINEAR)
    return from_uint8(np.asarray(img))


def save_image(path, frame: np.ndarray) -> None:
    Image.fromarray(to_uint8(frame), mode="RGB").save(path)
