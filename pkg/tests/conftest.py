import os

import numpy as np
import pytest

from fewmotion.model import ModelSpec, build_image_unet, inflate_to_video

CACHE = os.path.join(os.path.dirname(__file__), "..", ".cache", "tests")


def tiny_spec(**over) -> ModelSpec:
    base = dict(base_width=8, channel_mults=(1, 2), attn_levels=(1,),
                num_res_blocks=1, norm_groups=4, num_heads=2, text_width=8)
    base.update(over)
    return ModelSpec(**base)


@pytest.fixture()
def tiny_image_model():
    return build_image_unet(tiny_spec(), seed=7)


@pytest.fixture()
def tiny_video_model():
    image = build_image_unet(tiny_spec(), seed=7)
    return inflate_to_video(image, seed=8)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def cache_dir() -> str:
    os.makedirs(CACHE, exist_ok=True)
    return CACHE
