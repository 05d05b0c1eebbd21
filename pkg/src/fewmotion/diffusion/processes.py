"""Forward diffusion, training losses, and shared-noise initialization.

The video loss keeps the first frame clean and scores predictions for
frames 2..l only, so the model is trained purely on how later frames
follow from the first one. Shared-noise init mixes one common draw into
every frame's noise without renormalizing; the lowered variance is the
point, not a bug.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError, ValidationError, NonFiniteError
from ..numerics import ops, Tensor
from .schedule import NoiseSchedule


def q_sample(x0: np.ndarray, t: int, eps: np.ndarray,
             sched: NoiseSchedule) -> np.ndarray:
    """Noise clean data to timestep t: sqrt(abar)*x0 + sqrt(1-abar)*eps."""
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ShapeMismatchError(f"q_sample: x0 {x0.shape} vs eps {eps.shape}")
    if not (1 <= t <= sched.T):
        raise ValidationError(f"q_sample: t {t} outside [1, {sched.T}]")
    ab = sched.alpha_bar[t - 1]
    dt = x0.dtype
    return (np.sqrt(ab).astype(dt) * x0 + np.sqrt(1.0 - ab).astype(dt) * eps)


def image_loss(model, x0: np.ndarray, t, eps: np.ndarray, cond,
               sched: NoiseSchedule) -> Tensor:
    """Mean squared error between added and predicted noise (pretraining).

    t may be a scalar or a per-sample integer array.
    """
    x0 = np.asarray(x0)
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.int64))
    if x0.ndim != 4:
        raise ShapeMismatchError(f"image_loss: x0 must be (b, c, h, w), got {x0.shape}")
    if t_arr.size == 1:
        t_arr = np.full(x0.shape[0], int(t_arr[0]), dtype=np.int64)
    ab = sched.alpha_bar[t_arr - 1].astype(x0.dtype)
    xt = (np.sqrt(ab)[:, None, None, None] * x0
          + np.sqrt(1.0 - ab)[:, None, None, None] * eps)
    pred = model(xt, t_arr, cond)
    if not np.isfinite(pred.data).all():
        raise NonFiniteError("image_loss: non-finite model prediction")
    diff = ops.sub(pred, Tensor(eps))
    return ops.mean(ops.mul(diff, diff))


def video_loss_first_frame(model, frames: np.ndarray, t: int,
                           eps_seq: np.ndarray, cond,
                           sched: NoiseSchedule) -> Tensor:
    """Masked video loss: frame 1 stays clean, MSE over frames 2..l only.

    frames is the clean clip (l, c, h, w); eps_seq holds l-1 noise draws
    for frames 2..l. The first frame enters the model un-noised with the
    same timestep embedding as the rest; its prediction slot receives no
    gradient because the loss never reads it.
    """
    frames = np.asarray(frames)
    eps_seq = np.asarray(eps_seq)
    l = frames.shape[0]
    if l < 2:
        raise ValidationError(f"video_loss_first_frame: need l >= 2 frames, got {l}")
    if eps_seq.shape != frames[1:].shape:
        raise ShapeMismatchError(
            f"video_loss_first_frame: eps_seq {eps_seq.shape} vs frames[1:] {frames[1:].shape}")
    noisy_rest = q_sample(frames[1:], t, eps_seq, sched)
    model_in = np.concatenate([frames[:1], noisy_rest], axis=0)
    pred = model(model_in, t, cond)
    if not np.isfinite(pred.data).all():
        raise NonFiniteError("video_loss_first_frame: non-finite model prediction")
    tail = ops.tslice(pred, (slice(1, None),))
    diff = ops.sub(tail, Tensor(eps_seq))
    return ops.mean(ops.mul(diff, diff))


def shared_noise_init(l: int, frame_shape, alpha: float, seed: int,
                      dtype=np.float32) -> np.ndarray:
    """Initial noise for frames 2..l as a shared/independent mixture.

    Each frame's draw becomes alpha*shared + (1-alpha)*independent with no
    renormalization, so per-element variance is alpha^2 + (1-alpha)^2 and
    cross-frame correlation alpha^2 / (alpha^2 + (1-alpha)^2).
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"shared_noise_init: alpha {alpha} outside [0, 1]")
    if l < 2:
        raise ValidationError(f"shared_noise_init: need l >= 2, got {l}")
    rng = np.random.default_rng(seed)
    shape = tuple(frame_shape)
    shared = rng.standard_normal(shape)
    indep = rng.standard_normal((l - 1,) + shape)
    return (alpha * shared[None] + (1.0 - alpha) * indep).astype(dtype)
