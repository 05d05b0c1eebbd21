"""Ablation runner: sample-time variants of a tuned checkpoint.

Each mode changes one ingredient on fixed seeds and first frames so the
metric ordering between modes is a property of the recorded runs:

  full                 everything on
  no-shared-noise      shared_alpha forced to 0
  no-temporal-spatial  temporal conv branches disabled
  centered-conv        temporal kernel window recentered (shift off)
  strict-two-conv      temporal window reduced to the two prior frames
  no-temporal-attn     temporal attention disabled
  no-first-frame-attn  self-attention keys/values from each own frame

The train-time ablation (first-frame conditioning off) lives in
TrainConfig.first_frame_cond, not here.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..errors import ValidationError
from ..diffusion import NoiseSchedule, SamplerConfig
from ..model import UNet, VideoModeFlags
from ..pipeline import GenerationRequest, generate
from .metrics import EvalReport, evaluate

ABLATION_MODES = (
    "full", "no-shared-noise", "no-temporal-spatial", "centered-conv",
    "strict-two-conv", "no-temporal-attn", "no-first-frame-attn",
)


def mode_settings(mode: str, sampler: SamplerConfig) -> tuple[VideoModeFlags, SamplerConfig]:
    if mode not in ABLATION_MODES:
        raise ValidationError(f"ablate: unknown mode {mode!r}; "
                              f"choose from {', '.join(ABLATION_MODES)}")
    flags = VideoModeFlags()
    sampler = dataclasses.replace(sampler)
    if mode == "no-shared-noise":
        sampler.shared_alpha = 0.0
    elif mode == "no-temporal-spatial":
        flags.temporal_conv = False
    elif mode == "centered-conv":
        flags.kernel_mode = "centered"
    elif mode == "strict-two-conv":
        flags.kernel_mode = "strict_two"
    elif mode == "no-temporal-attn":
        flags.temporal_attn = False
    elif mode == "no-first-frame-attn":
        flags.first_frame_attn = False
    return flags, sampler


def run_ablation(model: UNet, sched: NoiseSchedule, first_frames: np.ndarray,
                 tokens: np.ndarray, kind: str, sampler: SamplerConfig,
                 length: int, modes=ABLATION_MODES,
                 seeds=None) -> dict[str, EvalReport]:
    """Generate per mode over (first frame, seed) pairs and score."""
    if seeds is None:
        seeds = [sampler.seed + i for i in range(len(first_frames))]
    if len(seeds) != len(first_frames):
        raise ValidationError("ablate: need one seed per first frame")
    saved = model.flags
    results: dict[str, EvalReport] = {}
    try:
        for mode in modes:
            flags, scfg = mode_settings(mode, sampler)
            model.flags = flags
            videos = []
            for ff, tok, seed in zip(first_frames, tokens, seeds):
                cfg = dataclasses.replace(scfg, seed=int(seed))
                req = GenerationRequest(first_frame=ff, tokens=tok,
                                        sampler=cfg, length=length)
                videos.append(generate(model, sched, req))
            results[mode] = evaluate(videos, kind, config={
                "mode": mode, "seeds": [int(s) for s in seeds],
                "shared_alpha": scfg.shared_alpha,
                "kernel_mode": flags.kernel_mode,
            })
    finally:
        model.flags = saved
    return results
