from .schedule import NoiseSchedule, make_schedule
from .processes import q_sample, image_loss, video_loss_first_frame, shared_noise_init
from .sampler import (LatentSequence, PostprocessFlags, SamplerConfig,
                      ddim_sample, ddim_invert, ddim_step_sequence)

__all__ = [
    "NoiseSchedule", "make_schedule",
    "q_sample", "image_loss", "video_loss_first_frame", "shared_noise_init",
    "LatentSequence", "PostprocessFlags", "SamplerConfig",
    "ddim_sample", "ddim_invert", "ddim_step_sequence",
]
