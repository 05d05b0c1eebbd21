"""Synthetic motion sets with ground-truth trajectories.

One motion kind is the shared pattern across a set; content (shape,
color, background, placement, size) varies per clip. Held-out
shape-color combinations are excluded from training clips so motion
generalization is measurable.

Manifest schema (manifest.json):
  {motion, resolution, frames, clips: [{dir, prompt, trajectory: [[x, y, size], ...]}],
   split: {train: [[shape, color], ...], heldout: [[shape, color], ...]}}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import ValidationError
from . import render
from .vocab import SHAPES, COLORS, BACKGROUNDS, MOTIONS, tokenize
from .io import save_clip

N_HELDOUT_COMBOS = 4
MAX_PLACEMENT_TRIES = 64

# blink alternates the foreground brightness between these two levels
BLINK_LEVELS = (1.0, 0.45)


@dataclass
class MotionKind:
    """A named motion with its parameter ranges (pixels are at 48-res scale)."""
    name: str
    velocity: tuple = (0.0, 0.0)     # px/frame, scaled by resolution/48
    rate: tuple = (1.0, 1.0)         # multiplicative size change per frame

    def sample_params(self, rng: np.random.Generator, resolution: int) -> dict:
        s = resolution / 48.0
        return {
            "velocity": float(rng.uniform(*self.velocity)) * s,
            "rate": float(rng.uniform(*self.rate)),
        }


MOTION_KINDS = {
    "slide_right": MotionKind("slide_right", velocity=(1.4, 2.4)),
    "slide_down": MotionKind("slide_down", velocity=(1.4, 2.4)),
    "grow": MotionKind("grow", rate=(1.035, 1.07)),
    "shrink": MotionKind("shrink", rate=(0.93, 0.965)),
    "bounce": MotionKind("bounce", velocity=(1.5, 2.5)),
    "blink": MotionKind("blink"),
}


def trajectory(kind: str, params: dict, l: int, start: dict) -> list[dict]:
    """Per-frame {cx, cy, size, brightness} for a clip."""
    cx, cy, size = start["cx"], start["cy"], start["size"]
    v, rate = params.get("velocity", 0.0), params.get("rate", 1.0)
    bounce_at = params.get("bounce_at", l // 2)
    out = []
    for j in range(l):
        bright = BLINK_LEVELS[j % 2] if kind == "blink" else 1.0
        out.append({"cx": cx, "cy": cy, "size": size, "brightness": bright})
        if kind == "slide_right":
            cx += v
        elif kind == "slide_down":
            cy += v
        elif kind in ("grow", "shrink"):
            size *= rate
        elif kind == "bounce":
            cy += v if j < bounce_at else -v
    return out


def _fits(resolution: int, traj: list[dict]) -> bool:
    margin = 1.0
    for p in traj:
        r = p["size"] * 1.56  # triangle circumradius is the widest case
        if not (margin + r <= p["cx"] <= resolution - margin - r):
            return False
        if not (margin + r <= p["cy"] <= resolution - margin - r):
            return False
    return True


@dataclass
class ClipEntry:
    dir: str
    prompt: str
    trajectory: list = field(default_factory=list)  # [[x, y, size], ...]


@dataclass
class MotionSetManifest:
    motion: str
    resolution: int
    frames: int
    clips: list = field(default_factory=list)
    split: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.motion not in MOTION_KINDS:
            raise ValidationError(f"manifest: unknown motion {self.motion!r}")
        if not (1 <= len(self.clips) <= 16):
            raise ValidationError(
                f"manifest: clip count {len(self.clips)} outside [1, 16]")
        if self.frames < 2:
            raise ValidationError(f"manifest: frames {self.frames} must be >= 2")
        train = {tuple(c) for c in self.split.get("train", [])}
        heldout = {tuple(c) for c in self.split.get("heldout", [])}
        if train & heldout:
            raise ValidationError("manifest: train/heldout split overlaps")

    def save(self, path) -> None:
        d = {"motion": self.motion, "resolution": self.resolution,
             "frames": self.frames, "clips": [asdict(c) for c in self.clips],
             "split": self.split}
        with open(path, "w") as f:
            json.dump(d, f, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "MotionSetManifest":
        with open(path) as f:
            d = json.load(f)
        m = cls(motion=d["motion"], resolution=d["resolution"], frames=d["frames"],
                clips=[ClipEntry(**c) for c in d["clips"]], split=d["split"])
        m.validate()
        return m


def content_split(seed: int) -> tuple[list, list]:
    """Deterministic train/held-out partition of (shape, color) combos."""
    combos = [(s, c) for s in SHAPES for c in COLORS]
    rng = np.random.default_rng(seed ^ 0xC0900B05)
    idx = rng.permutation(len(combos))
    heldout = [combos[i] for i in idx[:N_HELDOUT_COMBOS]]
    train = [combos[i] for i in idx[N_HELDOUT_COMBOS:]]
    return train, heldout


def _sample_start(rng, resolution, kind, params, l):
    """Draw content placement until the whole trajectory stays on canvas."""
    s = resolution / 48.0
    for _ in range(MAX_PLACEMENT_TRIES):
        size = float(rng.uniform(4.5 * s, 7.5 * s))
        if kind == "shrink":
            size = float(rng.uniform(7.0 * s, 10.0 * s))
        start = {
            "cx": float(rng.uniform(0.2, 0.8) * resolution),
            "cy": float(rng.uniform(0.2, 0.8) * resolution),
            "size": size,
        }
        if kind == "slide_right":
            start["cx"] = float(rng.uniform(0.15, 0.3) * resolution)
        elif kind == "slide_down":
            start["cy"] = float(rng.uniform(0.15, 0.3) * resolution)
        elif kind == "bounce":
            start["cy"] = float(rng.uniform(0.2, 0.35) * resolution)
            params = dict(params)
            params["bounce_at"] = int(rng.integers(max(2, l // 3), max(3, 2 * l // 3)))
        traj = trajectory(kind, params, l, start)
        if _fits(resolution, traj):
            return params, start, traj
    raise ValidationError(
        f"could not place a {kind} trajectory on a {resolution}px canvas")


def render_clip(kind: str, l: int, resolution: int, shape: str, color: str,
                bg: str, rng: np.random.Generator) -> tuple[np.ndarray, list, dict]:
    """Render one clip; returns (frames, [[x, y, size], ...], info)."""
    mk = MOTION_KINDS[kind]
    params = mk.sample_params(rng, resolution)
    params, start, traj = _sample_start(rng, resolution, kind, params, l)
    frames = np.empty((l, 3, resolution, resolution), dtype=np.float32)
    gt = []
    for j, p in enumerate(traj):
        frames[j], alpha = render.render_frame(
            resolution, shape, color, bg, p["cx"], p["cy"], p["size"],
            brightness=p["brightness"])
        x, y, size = render.alpha_stats(alpha)
        gt.append([round(x, 3), round(y, 3), round(size, 3)])
    return frames, gt, {"params": params, "start": start}


def gen_motion_set(kind: str, n_clips: int, l: int, resolution: int, seed: int,
                   out_dir) -> MotionSetManifest:
    """Render a few-shot motion set and write clips + manifest to out_dir."""
    if kind not in MOTION_KINDS:
        raise ValidationError(f"unknown motion kind {kind!r}")
    if not (1 <= n_clips <= 16):
        raise ValidationError(f"n_clips {n_clips} outside [1, 16]")
    if l < 2:
        raise ValidationError(f"l {l} must be >= 2")
    if resolution not in (32, 48, 64):
        raise ValidationError(f"resolution {resolution} not in (32, 48, 64)")
    rng = np.random.default_rng(seed)
    train, heldout = content_split(seed)
    os.makedirs(out_dir, exist_ok=True)
    manifest = MotionSetManifest(
        motion=kind, resolution=resolution, frames=l,
        split={"train": [list(c) for c in train],
               "heldout": [list(c) for c in heldout]})
    for i in range(n_clips):
        shape, color = train[int(rng.integers(len(train)))]
        bg = BACKGROUNDS[int(rng.integers(len(BACKGROUNDS)))]
        frames, gt, _ = render_clip(kind, l, resolution, shape, color, bg, rng)
        clip_dir = os.path.join(out_dir, f"clip_{i:03d}")
        save_clip(clip_dir, frames)
        prompt = f"{color} {shape} {bg} {kind.replace('_', ' ')}"
        tokenize(prompt)  # fail fast on vocabulary drift
        manifest.clips.append(ClipEntry(dir=f"clip_{i:03d}", prompt=prompt,
                                        trajectory=gt))
    manifest.validate()
    manifest.save(os.path.join(out_dir, "manifest.json"))
    return manifest


def gen_still_set(n: int, resolution: int, seed: int):
    """Stills covering the full content vocabulary, for image pretraining.

    Returns (images (n, 3, h, w) float32, prompt token array (n, max_tokens),
    prompt strings). The first len(shapes)*len(colors)*len(backgrounds)
    samples enumerate every combination once.
    """
    if n < 100:
        raise ValidationError(f"gen_still_set: n {n} must be >= 100")
    rng = np.random.default_rng(seed)
    combos = [(s, c, b) for s in SHAPES for c in COLORS for b in BACKGROUNDS]
    images = np.empty((n, 3, resolution, resolution), dtype=np.float32)
    prompts = []
    tokens = []
    scale = resolution / 48.0
    for i in range(n):
        if i < len(combos):
            shape, color, bg = combos[i]
        else:
            shape = SHAPES[int(rng.integers(len(SHAPES)))]
            color = COLORS[int(rng.integers(len(COLORS)))]
            bg = BACKGROUNDS[int(rng.integers(len(BACKGROUNDS)))]
        size = float(rng.uniform(4.5 * scale, 9.0 * scale))
        r = size * 1.56 + 1.0
        cx = float(rng.uniform(r, resolution - r))
        cy = float(rng.uniform(r, resolution - r))
        images[i], _ = render.render_frame(resolution, shape, color, bg, cx, cy, size)
        prompt = f"{color} {shape} {bg}"
        prompts.append(prompt)
        tokens.append(tokenize(prompt))
    return images, np.stack(tokens), prompts


def gen_first_frames(combos: list, n: int, resolution: int, seed: int,
                     motion: str | None = None):
    """First-frame images drawn from the given (shape, color) combos.

    Used for held-out evaluation; prompts carry the motion word when given.
    Returns (images, token array, prompt strings).
    """
    if not combos:
        raise ValidationError("gen_first_frames: empty combo list")
    rng = np.random.default_rng(seed)
    images = np.empty((n, 3, resolution, resolution), dtype=np.float32)
    prompts = []
    tokens = []
    scale = resolution / 48.0
    for i in range(n):
        shape, color = combos[i % len(combos)]
        bg = BACKGROUNDS[int(rng.integers(len(BACKGROUNDS)))]
        size = float(rng.uniform(4.5 * scale, 7.5 * scale))
        r = size * 1.56 + 1.0
        cx = float(rng.uniform(r, resolution - r))
        cy = float(rng.uniform(r, resolution - r))
        if motion == "slide_right":
            cx = float(rng.uniform(0.15, 0.3) * resolution)
        elif motion == "slide_down":
            cy = float(rng.uniform(0.15, 0.3) * resolution)
        elif motion == "bounce":
            cy = float(rng.uniform(0.2, 0.35) * resolution)
        images[i], _ = render.render_frame(resolution, shape, color, bg, cx, cy, size)
        prompt = f"{color} {shape} {bg}"
        if motion:
            prompt += f" {motion.replace('_', ' ')}"
        prompts.append(prompt)
        tokens.append(tokenize(prompt))
    return images, np.stack(tokens), prompts
