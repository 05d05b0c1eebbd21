"""The per-frame image UNet and its inflation into a video model.

One class serves both roles. Built plain, it is an image noise predictor
over a batch of independent frames. After inflate_to_video the same
module tree gains temporal units, first-frame attention routing, and
temporal attention; with every temporal flag off it reproduces the image
model bit-for-bit, which is the zero-init neutrality contract.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..numerics import Tensor, ops
from .layers import (AttnBlock, BuildCtx, Conv2d, Downsample, GroupNormA,
                     Linear, ResBlock, Upsample)
from .registry import NEW, ParamRegistry, apply_freeze_policy
from .spec import ModelSpec, VideoModeFlags

_INFLATABLE = (ResBlock, AttnBlock)
_SPATIAL_ONLY = (Conv2d, Linear, GroupNormA, Downsample, Upsample)


class UNet:
    """Noise predictor: eps = model(x_t, t, tokens).

    x is (b, c, h, w); in video mode b is the frame count and t a single
    shared timestep. Output shape always equals input shape.
    """

    def __init__(self, spec: ModelSpec, dtype=np.float32, seed: int = 0):
        spec.validate()
        self.spec = spec
        self.dtype = dtype
        self.registry = ParamRegistry()
        self.flags: VideoModeFlags | None = None  # set after inflation
        ctx = BuildCtx(self.registry, np.random.default_rng(seed), dtype)

        widths = spec.widths
        tw = spec.time_width
        self.token_table = ctx.param("text.table", "text.table",
                                     ctx.normal((spec.vocab_size, spec.text_width), 0.02))
        self.time1 = Linear(ctx, "time.fc1", spec.base_width, tw)
        self.time2 = Linear(ctx, "time.fc2", tw, tw)
        self.conv_in = Conv2d(ctx, "conv_in", spec.in_channels, widths[0])

        def attn_or_none(name, lvl):
            if lvl in spec.attn_levels:
                return AttnBlock(ctx, name, widths[lvl], spec.text_width,
                                 spec.num_heads, spec.norm_groups)
            return None

        self.down = []
        for i, w in enumerate(widths):
            res = [ResBlock(ctx, f"down{i}.res{r}", w, tw, spec.norm_groups)
                   for r in range(spec.num_res_blocks)]
            attn = [attn_or_none(f"down{i}.attn{r}", i)
                    for r in range(spec.num_res_blocks)]
            ds = (Downsample(ctx, f"down{i}.down", w, widths[i + 1])
                  if i < len(widths) - 1 else None)
            self.down.append({"res": res, "attn": attn, "down": ds})

        wm = widths[-1]
        self.mid_res1 = ResBlock(ctx, "mid.res0", wm, tw, spec.norm_groups)
        self.mid_attn = AttnBlock(ctx, "mid.attn", wm, spec.text_width,
                                  spec.num_heads, spec.norm_groups)
        self.mid_res2 = ResBlock(ctx, "mid.res1", wm, tw, spec.norm_groups)

        self.up = []
        for i, w in enumerate(widths):
            proj = Conv2d(ctx, f"up{i}.skip", w, w, k=1)
            res = [ResBlock(ctx, f"up{i}.res{r}", w, tw, spec.norm_groups)
                   for r in range(spec.num_res_blocks)]
            attn = [attn_or_none(f"up{i}.attn{r}", i)
                    for r in range(spec.num_res_blocks)]
            us = Upsample(ctx, f"up{i}.up", w, widths[i - 1]) if i > 0 else None
            self.up.append({"proj": proj, "res": res, "attn": attn, "up": us})

        self.gn_out = GroupNormA(ctx, "out.gn", widths[0], spec.norm_groups)
        self.conv_out = Conv2d(ctx, "out.conv", widths[0], spec.in_channels,
                               zero_init=True)

    # ------------------------------------------------------------- forward

    @property
    def is_video(self) -> bool:
        return self.flags is not None

    def _text(self, tokens) -> Tensor:
        ids = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        if ids.max(initial=0) >= self.spec.vocab_size or ids.min(initial=0) < 0:
            raise ValidationError(
                f"tokens outside vocabulary of size {self.spec.vocab_size}")
        return ops.embedding(self.token_table, ids)

    def __call__(self, x, t, tokens) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=self.dtype))
        b = x.data.shape[0]
        t_arr = np.asarray(t, dtype=self.dtype).reshape(-1)
        if t_arr.size == 1:
            t_arr = np.full(b, t_arr[0], dtype=self.dtype)
        temb = ops.timestep_embedding(Tensor(t_arr), self.spec.base_width)
        temb = self.time2(ops.silu(self.time1(temb)))
        text = self._text(tokens)
        flags = self.flags

        # channels-last internally; public contract stays (b, c, h, w)
        h = self.conv_in(ops.transpose(x, (0, 2, 3, 1)))
        skips = []
        for lvl in self.down:
            for res, attn in zip(lvl["res"], lvl["attn"]):
                h = res(h, temb, flags)
                if attn is not None:
                    h = attn(h, text, flags)
            skips.append(h)
            if lvl["down"] is not None:
                h = lvl["down"](h)

        h = self.mid_res1(h, temb, flags)
        h = self.mid_attn(h, text, flags)
        h = self.mid_res2(h, temb, flags)

        for i in range(len(self.up) - 1, -1, -1):
            lvl = self.up[i]
            h = ops.add(h, lvl["proj"](skips[i]))
            for res, attn in zip(lvl["res"], lvl["attn"]):
                h = res(h, temb, flags)
                if attn is not None:
                    h = attn(h, text, flags)
            if lvl["up"] is not None:
                h = lvl["up"](h)

        out = self.conv_out(ops.silu(self.gn_out(h)))
        return ops.transpose(out, (0, 3, 1, 2))

    # ------------------------------------------------------------ structure

    def res_blocks(self):
        for i, lvl in enumerate(self.down):
            for r, blk in enumerate(lvl["res"]):
                yield f"down{i}.res{r}", blk
        yield "mid.res0", self.mid_res1
        yield "mid.res1", self.mid_res2
        for i, lvl in enumerate(self.up):
            for r, blk in enumerate(lvl["res"]):
                yield f"up{i}.res{r}", blk

    def attn_blocks(self):
        for i, lvl in enumerate(self.down):
            for r, blk in enumerate(lvl["attn"]):
                if blk is not None:
                    yield f"down{i}.attn{r}", blk
        yield "mid.attn", self.mid_attn
        for i, lvl in enumerate(self.up):
            for r, blk in enumerate(lvl["attn"]):
                if blk is not None:
                    yield f"up{i}.attn{r}", blk


def build_image_unet(spec: ModelSpec, dtype=np.float32, seed: int = 0) -> UNet:
    """Fresh image UNet; all parameters pretrain-origin and trainable."""
    return UNet(spec, dtype=dtype, seed=seed)


def inflate_to_video(image: UNet, seed: int = 0) -> UNet:
    """Turn an image UNet into a video model, reusing its weights in place.

    Residual-block convs gain gated temporal units, self-attention routes
    keys/values to frame 1, a temporal-attention extension follows every
    attention block. All additions leave the output untouched at creation.
    The returned model shares parameter tensors with the input model.
    """
    if image.is_video:
        raise ValidationError("inflate_to_video: model is already inflated")
    for _, blk in list(image.res_blocks()) + list(image.attn_blocks()):
        if not isinstance(blk, _INFLATABLE):
            raise ValidationError(f"inflate_to_video: unknown layer kind {type(blk).__name__}")

    video = UNet.__new__(UNet)
    video.__dict__.update(image.__dict__)
    reg = ParamRegistry()
    reg.absorb(image.registry)
    video.registry = reg
    ctx = BuildCtx(reg, np.random.default_rng(seed), image.dtype, origin=NEW)
    for name, blk in video.res_blocks():
        blk.inflate(ctx, name)
    for name, blk in video.attn_blocks():
        blk.inflate(ctx, name, image.spec.norm_groups)
    video.flags = VideoModeFlags()
    return video


__all__ = ["UNet", "build_image_unet", "inflate_to_video", "apply_freeze_policy"]
