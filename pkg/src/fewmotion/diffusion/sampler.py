"""DDIM sampling with first-frame preservation, and DDIM inversion.

The sampler owns no global state: every random draw comes from the
seeded config, and frame 1 is physically never written, so the output's
first frame is bit-identical to the condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError, ShapeMismatchError, ValidationError
from ..numerics import no_grad
from .schedule import NoiseSchedule


@dataclass
class LatentSequence:
    """Per-frame arrays z^1..z^l; z^1 may be pinned clean."""
    frames: np.ndarray  # (l, c, h, w)
    first_frame_clean: bool = True

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 4:
            raise ShapeMismatchError(
                f"LatentSequence: frames must be (l, c, h, w), got {self.frames.shape}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]


@dataclass
class PostprocessFlags:
    adain: bool = True
    hist_match: bool = True


@dataclass
class SamplerConfig:
    num_inference_steps: int = 50
    shared_alpha: float = 0.2
    seed: int = 0
    eta: float = 0.0
    postprocess: PostprocessFlags = field(default_factory=PostprocessFlags)

    def validate(self, sched: NoiseSchedule) -> None:
        if not (1 <= self.num_inference_steps <= sched.T):
            raise ValidationError(
                f"sampler: num_inference_steps {self.num_inference_steps} outside [1, {sched.T}]")
        if not (0.0 <= self.shared_alpha <= 1.0):
            raise ValidationError(f"sampler: shared_alpha {self.shared_alpha} outside [0, 1]")
        if self.eta < 0.0:
            raise ValidationError(f"sampler: eta {self.eta} must be >= 0")


def ddim_step_sequence(T: int, n: int) -> np.ndarray:
    """n evenly spaced timesteps in {1..T}, strictly increasing, ending at T."""
    if not (1 <= n <= T):
        raise ValidationError(f"ddim_step_sequence: n {n} outside [1, {T}]")
    return np.round(np.arange(1, n + 1) * (T / n)).astype(int)


def ddim_sample(model, init: LatentSequence, sched: NoiseSchedule,
                cfg: SamplerConfig, cond) -> np.ndarray:
    """Denoise frames 2..l over the DDIM ladder; frame 1 is preserved.

    One model call covers the whole sequence per step. Returns the clean
    video (l, c, h, w); the output first frame is exactly init's.
    """
    cfg.validate(sched)
    if not init.first_frame_clean:
        raise ValidationError("ddim_sample: init.first_frame_clean must be true")
    steps = ddim_step_sequence(sched.T, cfg.num_inference_steps)
    z1 = init.frames[:1]
    rest = init.frames[1:].copy()
    dt = rest.dtype
    noise_rng = np.random.default_rng(cfg.seed ^ 0x5EED0E7A)

    with no_grad():
        for i in range(len(steps) - 1, -1, -1):
            t = int(steps[i])
            t_prev = int(steps[i - 1]) if i > 0 else 0
            model_in = np.concatenate([z1, rest], axis=0)
            eps = model(model_in, t, cond).data[1:]
            rest = _ddim_update(rest, eps, sched, t, t_prev, cfg.eta, noise_rng, dt)
            if not np.isfinite(rest).all():
                raise NonFiniteError(f"ddim_sample: non-finite latent at step {i} (t={t})")
    return np.concatenate([z1, rest], axis=0)


def _ddim_update(x, eps, sched, t, t_prev, eta, rng, dt):
    ab_t = float(sched.abar(t))
    ab_p = float(sched.abar(t_prev))
    x0 = (x - np.sqrt(1.0 - ab_t) * eps) / np.sqrt(ab_t)
    if eta > 0.0 and t_prev > 0:
        sigma = eta * np.sqrt((1.0 - ab_p) / (1.0 - ab_t)) * np.sqrt(1.0 - ab_t / ab_p)
    else:
        sigma = 0.0
    dir_coeff = np.sqrt(max(1.0 - ab_p - sigma ** 2, 0.0))
    out = np.sqrt(ab_p) * x0 + dir_coeff * eps
    if sigma > 0.0:
        out = out + sigma * rng.standard_normal(x.shape)
    return out.astype(dt)


def ddim_invert(model, video: np.ndarray, sched: NoiseSchedule,
                steps: int, cond) -> LatentSequence:
    """Run the DDIM recursion backwards: clean frames -> step-T latents.

    Frames 2..l are carried up the ladder with the first frame held clean
    in every model input; steps == 0 returns the input unchanged.
    """
    video = np.asarray(video)
    if video.ndim != 4:
        raise ShapeMismatchError(f"ddim_invert: video must be (l, c, h, w), got {video.shape}")
    if steps < 0 or steps > sched.T:
        raise ValidationError(f"ddim_invert: steps {steps} outside [0, {sched.T}]")
    if steps == 0:
        return LatentSequence(frames=video.copy(), first_frame_clean=True)
    ladder = ddim_step_sequence(sched.T, steps)
    z1 = video[:1]
    rest = video[1:].copy()
    dt = rest.dtype

    with no_grad():
        for i, t in enumerate(ladder):
            t_src = int(ladder[i - 1]) if i > 0 else 0
            t = int(t)
            model_in = np.concatenate([z1, rest], axis=0)
            eps = model(model_in, t, cond).data[1:]
            ab_t = float(sched.abar(t))
            ab_s = float(sched.abar(t_src))
            ratio = np.sqrt(ab_t / ab_s)
            rest = (ratio * (rest - np.sqrt(1.0 - ab_s) * eps)
                    + np.sqrt(1.0 - ab_t) * eps).astype(dt)
            if not np.isfinite(rest).all():
                raise NonFiniteError(f"ddim_invert: non-finite latent at step {i} (t={t})")
    return LatentSequence(frames=np.concatenate([z1, rest], axis=0),
                          first_frame_clean=True)
