"""Inference applications: generation, real-image animation, video editing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..diffusion import (LatentSequence, NoiseSchedule, SamplerConfig,
                         ddim_invert, ddim_sample, shared_noise_init)
from ..model import UNet
from ..data import tokenize, unconditional, load_image
from .postprocess import adain_latent, histogram_match


@dataclass
class GenerationRequest:
    first_frame: np.ndarray                      # (3, h, w) in [-1, 1]
    tokens: np.ndarray                           # prompt token ids
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    length: int = 16

    def validate(self, resolution: int | None = None) -> None:
        ff = np.asarray(self.first_frame)
        if ff.ndim != 3 or ff.shape[0] != 3 or ff.shape[1] != ff.shape[2]:
            raise ValidationError(
                f"generate: first frame must be (3, s, s), got {ff.shape}")
        if resolution is not None and ff.shape[1] != resolution:
            raise ValidationError(
                f"generate: first frame resolution {ff.shape[1]} != trained {resolution}")
        if self.length < 2:
            raise ValidationError(f"generate: length {self.length} must be >= 2")


def _postprocess(video: np.ndarray, sampler: SamplerConfig) -> np.ndarray:
    if sampler.postprocess.adain:
        video = adain_latent(video)
    if sampler.postprocess.hist_match:
        video = histogram_match(video)
    return video


def generate(model: UNet, sched: NoiseSchedule, req: GenerationRequest,
             resolution: int | None = None) -> np.ndarray:
    """First-frame-conditioned sampling: clean frame 1, shared noise after.

    Returns (length, 3, h, w); frame 1 of the output is the request's
    first frame bit-for-bit (post-processing never touches it).
    """
    if not model.is_video:
        raise ValidationError("generate: model has not been inflated to video")
    req.validate(resolution)
    ff = np.asarray(req.first_frame, dtype=np.float32)
    noise = shared_noise_init(req.length, ff.shape, req.sampler.shared_alpha,
                              req.sampler.seed, dtype=ff.dtype)
    init = LatentSequence(np.concatenate([ff[None], noise], axis=0))
    video = ddim_sample(model, init, sched, req.sampler, req.tokens)
    return _postprocess(video, req.sampler)


def animate_image(image_path, prompt: str, model: UNet, sched: NoiseSchedule,
                  sampler: SamplerConfig, length: int = 16,
                  resolution: int | None = None) -> np.ndarray:
    """Animate an external image by placing it in the first frame."""
    ff = load_image(image_path, resolution)
    req = GenerationRequest(first_frame=ff, tokens=tokenize(prompt),
                            sampler=sampler, length=length)
    return generate(model, sched, req, resolution)


def edit_video(template: np.ndarray, edited_first_frame: np.ndarray,
               prompt: str, model: UNet, sched: NoiseSchedule,
               sampler: SamplerConfig, inversion_steps: int | None = None,
               inversion_strength: float = 1.0,
               resolution: int | None = None) -> np.ndarray:
    """Re-render a single-clip motion with a replaced first frame.

    The template's frames 2..l are DDIM-inverted (neutral prompt) to give
    the base motion; at strength 0 the latents are fresh shared noise and
    the call reduces exactly to generate().
    """
    template = np.asarray(template, dtype=np.float32)
    edited = np.asarray(edited_first_frame, dtype=np.float32)
    if edited.shape != template.shape[1:]:
        raise ValidationError(
            f"edit_video: edited frame {edited.shape} does not match template "
            f"frames {template.shape[1:]}")
    if not (0.0 <= inversion_strength <= 1.0):
        raise ValidationError(
            f"edit_video: inversion_strength {inversion_strength} outside [0, 1]")
    req = GenerationRequest(first_frame=edited, tokens=tokenize(prompt),
                            sampler=sampler, length=template.shape[0])
    req.validate(resolution)
    if inversion_strength == 0.0:
        return generate(model, sched, req, resolution)

    steps = inversion_steps if inversion_steps is not None else sampler.num_inference_steps
    inverted = ddim_invert(model, template, sched, steps, unconditional())
    fresh = shared_noise_init(template.shape[0], edited.shape,
                              sampler.shared_alpha, sampler.seed,
                              dtype=edited.dtype)
    mix = (inversion_strength * inverted.frames[1:]
           + (1.0 - inversion_strength) * fresh).astype(edited.dtype)
    init = LatentSequence(np.concatenate([edited[None], mix], axis=0))
    video = ddim_sample(model, init, sched, sampler, req.tokens)
    return _postprocess(video, sampler)
