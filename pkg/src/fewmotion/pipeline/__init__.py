from .optim import Adam
from .train import (TrainConfig, TrainHistory, pretrain_image, tune_motion,
                    evaluate_image_loss, load_manifest_clips)
from .generate import GenerationRequest, generate, animate_image, edit_video
from .postprocess import adain_latent, histogram_match

__all__ = [
    "Adam", "TrainConfig", "TrainHistory", "pretrain_image", "tune_motion",
    "evaluate_image_loss", "load_manifest_clips",
    "GenerationRequest", "generate", "animate_image", "edit_video",
    "adain_latent", "histogram_match",
]
