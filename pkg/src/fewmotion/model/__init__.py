from .spec import ModelSpec, VideoModeFlags
from .registry import ParamRegistry, ParamEntry, apply_freeze_policy, PRETRAINED, NEW
from .layers import (VideoFeatureMap, ResBlock, AttnBlock, TemporalUnit, GateConv,
                     frames_to_temporal, temporal_to_frames)
from .unet import UNet, build_image_unet, inflate_to_video
from .checkpoint import save_checkpoint, load_checkpoint, MAGIC, FORMAT_VERSION

__all__ = [
    "ModelSpec", "VideoModeFlags", "ParamRegistry", "ParamEntry",
    "apply_freeze_policy", "PRETRAINED", "NEW", "VideoFeatureMap",
    "ResBlock", "AttnBlock", "TemporalUnit", "GateConv",
    "frames_to_temporal", "temporal_to_frames",
    "UNet", "build_image_unet", "inflate_to_video",
    "save_checkpoint", "load_checkpoint", "MAGIC", "FORMAT_VERSION",
]
