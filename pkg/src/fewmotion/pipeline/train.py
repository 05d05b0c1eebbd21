"""Training stages: image pretraining and few-shot motion tuning.

Pretraining fits the image UNet to the still-image corpus with the plain
noise-prediction objective. Motion tuning inflates the pretrained model,
applies the freeze policy, and optimizes the masked first-frame video
loss, one clip per step. A single-clip manifest turns the same loop into
the editing-mode tuning stage.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, NonFiniteError, ValidationError
from ..numerics import Tensor, no_grad, ops
from ..diffusion import (NoiseSchedule, image_loss, q_sample,
                         video_loss_first_frame)
from ..model import (ModelSpec, UNet, apply_freeze_policy, build_image_unet,
                     inflate_to_video, save_checkpoint)
from ..data import MotionSetManifest, load_clip, tokenize
from .optim import Adam

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 500

STAGES = ("pretrain", "tune_motion", "tune_edit")


@dataclass
class TrainConfig:
    stage: str = "pretrain"
    learning_rate: float = 3.0e-5
    steps: int = 1000
    batch: int = 8
    clip_length: int = 16
    seed: int = 0
    grad_clip: float = 1.0
    log_every: int = 50
    checkpoint_every: int = 0       # 0: final checkpoint only
    first_frame_cond: bool = True   # off: noise and score every frame (ablation)

    def validate(self) -> None:
        if self.stage not in STAGES:
            raise ValidationError(f"train: unknown stage {self.stage!r}")
        if self.learning_rate <= 0:
            raise ValidationError(f"train: learning_rate must be > 0")
        if self.steps < 0 or self.batch < 1:
            raise ValidationError("train: steps must be >= 0 and batch >= 1")
        if self.stage != "pretrain" and self.clip_length < 2:
            raise ValidationError(
                f"train: clip_length {self.clip_length} must be >= 2 for video stages")


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)   # (step, loss)
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    def record(self, step: int, loss: float) -> None:
        if not self.losses:
            self.initial_loss = loss
        self.losses.append((step, loss))
        self.final_loss = loss

    def smoothed_final(self, k: int = 50) -> float:
        tail = [v for _, v in self.losses[-k:]]
        return float(np.mean(tail)) if tail else float("nan")

    def smoothed_initial(self, k: int = 50) -> float:
        head = [v for _, v in self.losses[:k]]
        return float(np.mean(head)) if head else float("nan")


def _divergence_guard(loss: float, initial: float, streak: int, step: int) -> int:
    if not np.isfinite(loss):
        raise NonFiniteError(f"training: non-finite loss at step {step}")
    if loss > DIVERGENCE_FACTOR * max(initial, 1e-8):
        streak += 1
        if streak >= DIVERGENCE_PATIENCE:
            raise DivergenceError(
                f"training diverged: loss {loss:.4g} stayed above "
                f"{DIVERGENCE_FACTOR}x initial {initial:.4g} for "
                f"{DIVERGENCE_PATIENCE} steps, last step {step}")
    else:
        streak = 0
    return streak


def pretrain_image(images: np.ndarray, tokens: np.ndarray, spec: ModelSpec,
                   sched: NoiseSchedule, cfg: TrainConfig,
                   out_path=None, log=print) -> tuple[UNet, TrainHistory]:
    """Fit the image UNet on stills; returns (model, loss history)."""
    cfg.validate()
    if images.shape[0] < 1:
        raise ValidationError("pretrain_image: empty dataset")
    model = build_image_unet(spec, seed=cfg.seed)
    opt = Adam(model.registry.tensors(trainable_only=True), cfg.learning_rate,
               clip_norm=cfg.grad_clip)
    rng = np.random.default_rng(cfg.seed)
    hist = TrainHistory()
    streak = 0
    for step in range(cfg.steps):
        idx = rng.integers(0, images.shape[0], size=cfg.batch)
        t = rng.integers(1, sched.T + 1, size=cfg.batch)
        eps = rng.standard_normal(images[idx].shape).astype(images.dtype)
        try:
            loss = image_loss(model, images[idx], t, eps, tokens[idx], sched)
        except NonFiniteError as e:
            raise NonFiniteError(f"{e} (step {step})") from None
        loss.backward()
        opt.step()
        opt.zero_grad()
        val = loss.item()
        hist.record(step, val)
        streak = _divergence_guard(val, hist.initial_loss, streak, step)
        if log and cfg.log_every and step % cfg.log_every == 0:
            log(f"pretrain step {step}: loss {val:.4f}")
        if out_path and cfg.checkpoint_every and step and step % cfg.checkpoint_every == 0:
            save_checkpoint(out_path, model, sched, meta=_meta("pretrain", images, hist))
    if out_path:
        save_checkpoint(out_path, model, sched, meta=_meta("pretrain", images, hist))
    return model, hist


def _meta(stage: str, images, hist: TrainHistory, **extra) -> dict:
    m = {"stage": stage, "resolution": int(images.shape[-1]),
         "loss_initial": hist.initial_loss, "loss_final": hist.final_loss}
    m.update(extra)
    return m


def load_manifest_clips(manifest: MotionSetManifest, root_dir):
    """Clips and token arrays for every manifest entry."""
    clips, toks = [], []
    for entry in manifest.clips:
        video = load_clip(os.path.join(root_dir, entry.dir))
        if video.shape[0] != manifest.frames:
            raise ValidationError(
                f"clip {entry.dir} has {video.shape[0]} frames, manifest says {manifest.frames}")
        if video.shape[-1] != manifest.resolution:
            raise ValidationError(
                f"clip {entry.dir} resolution {video.shape[-1]} != {manifest.resolution}")
        clips.append(video)
        toks.append(tokenize(entry.prompt))
    return clips, toks


def tune_motion(manifest: MotionSetManifest, root_dir, motion_prompt: str,
                base_model: UNet, sched: NoiseSchedule, cfg: TrainConfig,
                out_path=None, log=print) -> tuple[UNet, TrainHistory]:
    """Few-shot tune the inflated model on a motion set.

    One clip per step, a random l-frame window when clips run longer,
    timestep drawn uniformly, loss masked to frames 2..l. Only the new
    layers and self-attention query projections receive updates.
    """
    cfg.validate()
    manifest.validate()
    clips, toks = load_manifest_clips(manifest, root_dir)
    l = cfg.clip_length
    if any(c.shape[0] < l for c in clips):
        raise ValidationError(
            f"tune_motion: manifest clips shorter than clip_length {l}")
    tokenize(motion_prompt)  # must be in-vocabulary
    model = base_model if base_model.is_video else inflate_to_video(base_model)
    apply_freeze_policy(model.registry)
    opt = Adam(model.registry.tensors(trainable_only=True), cfg.learning_rate,
               clip_norm=cfg.grad_clip)
    rng = np.random.default_rng(cfg.seed + 1)
    hist = TrainHistory()
    streak = 0
    for step in range(cfg.steps):
        ci = int(rng.integers(len(clips)))
        clip = clips[ci]
        if clip.shape[0] > l:
            s = int(rng.integers(clip.shape[0] - l + 1))
            clip = clip[s:s + l]
        t = int(rng.integers(1, sched.T + 1))
        try:
            if cfg.first_frame_cond:
                eps = rng.standard_normal(clip[1:].shape).astype(clip.dtype)
                loss = video_loss_first_frame(model, clip, t, eps, toks[ci], sched)
            else:
                eps = rng.standard_normal(clip.shape).astype(clip.dtype)
                noisy = q_sample(clip, t, eps, sched)
                pred = model(noisy, t, toks[ci])
                diff = ops.sub(pred, Tensor(eps))
                loss = ops.mean(ops.mul(diff, diff))
        except NonFiniteError as e:
            raise NonFiniteError(f"{e} (step {step})") from None
        loss.backward()
        opt.step()
        opt.zero_grad()
        val = loss.item()
        hist.record(step, val)
        streak = _divergence_guard(val, hist.initial_loss, streak, step)
        if log and cfg.log_every and step % cfg.log_every == 0:
            log(f"tune step {step}: loss {val:.4f}")
        if out_path and cfg.checkpoint_every and step and step % cfg.checkpoint_every == 0:
            _save_tuned(out_path, model, sched, manifest, hist)
    if out_path:
        _save_tuned(out_path, model, sched, manifest, hist)
    return model, hist


def _save_tuned(out_path, model, sched, manifest, hist):
    save_checkpoint(out_path, model, sched, meta={
        "stage": "tune_motion", "motion": manifest.motion,
        "resolution": manifest.resolution, "clip_length": manifest.frames,
        "n_clips": len(manifest.clips), "freeze_policy_applied": True,
        "loss_initial": hist.initial_loss, "loss_final": hist.final_loss,
        "heldout_combos": manifest.split.get("heldout", []),
    })


def evaluate_image_loss(model: UNet, images: np.ndarray, tokens: np.ndarray,
                        sched: NoiseSchedule, seed: int = 0) -> float:
    """Deterministic held-out denoising loss (fixed noise and timesteps)."""
    rng = np.random.default_rng(seed)
    t = rng.integers(1, sched.T + 1, size=images.shape[0])
    eps = rng.standard_normal(images.shape).astype(images.dtype)
    with no_grad():
        loss = image_loss(model, images, t, eps, tokens, sched)
    return loss.item()
