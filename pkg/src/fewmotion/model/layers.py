"""Model building blocks on top of the numerics primitives.

The video-specific pieces live beside their spatial hosts: a residual
block owns an optional temporal unit per conv, an attention block owns an
optional temporal-attention extension. All video additions are built so a
freshly inflated model computes exactly what the image model computes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError, ValidationError
from ..numerics import Tensor, ops
from .registry import ParamRegistry, PRETRAINED


class BuildCtx:
    """Carries the registry, rng, dtype and origin tag during construction."""

    def __init__(self, reg: ParamRegistry, rng: np.random.Generator,
                 dtype=np.float32, origin: str = PRETRAINED):
        self.reg = reg
        self.rng = rng
        self.dtype = dtype
        self.origin = origin

    def param(self, name: str, group: str, array: np.ndarray) -> Tensor:
        t = Tensor(np.asarray(array, dtype=self.dtype), requires_grad=True)
        return self.reg.add(name, t, group, self.origin)

    def normal(self, shape, std: float) -> np.ndarray:
        return self.rng.standard_normal(shape) * std


class Linear:
    def __init__(self, ctx: BuildCtx, name: str, d_in: int, d_out: int,
                 zero_init: bool = False, bias: bool = True,
                 group: str | None = None):
        group = group or name
        std = 0.0 if zero_init else d_in ** -0.5
        self.w = ctx.param(f"{name}.w", group, ctx.normal((d_in, d_out), std))
        self.b = ctx.param(f"{name}.b", group, np.zeros(d_out)) if bias else None

    def __call__(self, x):
        return ops.linear(x, self.w, self.b)


class Conv2d:
    def __init__(self, ctx: BuildCtx, name: str, c_in: int, c_out: int,
                 k: int = 3, zero_init: bool = False, group: str | None = None):
        group = group or name
        std = 0.0 if zero_init else (c_in * k * k) ** -0.5
        self.w = ctx.param(f"{name}.w", group, ctx.normal((c_out, c_in, k, k), std))
        self.b = ctx.param(f"{name}.b", group, np.zeros(c_out))

    def __call__(self, x):
        return ops.conv2d(x, self.w, self.b)


class GroupNormA:
    """Group norm with a learned per-channel affine (channels-last)."""

    def __init__(self, ctx: BuildCtx, name: str, channels: int, groups: int,
                 group: str | None = None):
        group = group or name
        self.groups = groups
        self.gamma = ctx.param(f"{name}.gamma", group, np.ones(channels))
        self.beta = ctx.param(f"{name}.beta", group, np.zeros(channels))

    def __call__(self, x):
        h = ops.group_norm(x, self.groups)
        return ops.add(ops.mul(h, self.gamma), self.beta)


class TemporalUnit:
    """Depthwise shifted temporal conv plus pointwise channel mixing.

    The depthwise kernel and the pointwise bias start at zero; the
    pointwise matrix starts as identity. The unit therefore outputs
    exactly zero at creation while keeping a nonzero gradient path into
    the kernel (an all-zero separable pair would be a stationary saddle).
    """

    def __init__(self, ctx: BuildCtx, name: str, channels: int):
        self.ker = ctx.param(f"{name}.ker", name, np.zeros((channels, 3)))
        self.mix_w = ctx.param(f"{name}.mix_w", name, np.eye(channels))
        self.mix_b = ctx.param(f"{name}.mix_b", name, np.zeros(channels))

    def __call__(self, x_ncf, mode: str):
        h = ops.temporal_conv1d(x_ncf, self.ker, mode)
        h = ops.transpose(h, (0, 2, 1))
        h = ops.linear(h, self.mix_w, self.mix_b)
        return ops.transpose(h, (0, 2, 1))


class GateConv:
    """One-channel 3x3 conv + sigmoid; exactly 0.5 everywhere at zero init."""

    def __init__(self, ctx: BuildCtx, name: str, c_in: int):
        self.w = ctx.param(f"{name}.w", name, np.zeros((1, c_in, 3, 3)))
        self.b = ctx.param(f"{name}.b", name, np.zeros(1))

    def __call__(self, x):
        return ops.sigmoid(ops.conv2d(x, self.w, self.b))


def frames_to_temporal(x, f: int, c: int, h: int, w: int):
    """(f, h, w, c) -> (h*w, c, f), the temporal token view."""
    return ops.reshape(ops.transpose(x, (1, 2, 3, 0)), (h * w, c, f))


def temporal_to_frames(x, f: int, c: int, h: int, w: int):
    """(h*w, c, f) -> (f, h, w, c)."""
    return ops.transpose(ops.reshape(x, (h, w, c, f)), (3, 0, 1, 2))


@dataclass
class VideoFeatureMap:
    """5-D (b, c, f, h, w) feature array; axis 2 is temporal.

    The two canonical views (b*h*w, c, f) and (b*f, c, h, w) are exact
    reshapes: round-tripping either reproduces the array bit-for-bit.
    """
    data: np.ndarray
    temporal_axis: int = 2

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 5:
            raise ShapeMismatchError(
                f"VideoFeatureMap: need (b, c, f, h, w), got {self.data.shape}")

    def temporal_tokens(self) -> np.ndarray:
        b, c, f, h, w = self.data.shape
        return self.data.transpose(0, 3, 4, 1, 2).reshape(b * h * w, c, f)

    def spatial_batch(self) -> np.ndarray:
        b, c, f, h, w = self.data.shape
        return self.data.transpose(0, 2, 1, 3, 4).reshape(b * f, c, h, w)

    @classmethod
    def from_temporal_tokens(cls, arr, b, c, f, h, w) -> "VideoFeatureMap":
        return cls(np.asarray(arr).reshape(b, h, w, c, f).transpose(0, 3, 4, 1, 2))

    @classmethod
    def from_spatial_batch(cls, arr, b, c, f, h, w) -> "VideoFeatureMap":
        return cls(np.asarray(arr).reshape(b, f, c, h, w).transpose(0, 2, 1, 3, 4))


class ResBlock:
    """norm -> SiLU -> conv, timestep shift, norm -> SiLU -> conv, residual.

    In video mode each conv runs as a temporal-spatial pair: the pretrained
    2-D conv on the spatial view plus a gated temporal unit on the
    temporal view.
    """

    def __init__(self, ctx: BuildCtx, name: str, channels: int, time_width: int,
                 norm_groups: int):
        self.channels = channels
        self.gn1 = GroupNormA(ctx, f"{name}.gn1", channels, norm_groups)
        self.conv1 = Conv2d(ctx, f"{name}.conv1", channels, channels)
        self.temb_proj = Linear(ctx, f"{name}.temb", time_width, channels)
        self.gn2 = GroupNormA(ctx, f"{name}.gn2", channels, norm_groups)
        self.conv2 = Conv2d(ctx, f"{name}.conv2", channels, channels)
        # populated at inflation
        self.t_unit1 = None
        self.t_unit2 = None
        self.gate1 = None
        self.gate2 = None

    def inflate(self, ctx: BuildCtx, name: str):
        self.t_unit1 = TemporalUnit(ctx, f"{name}.conv1.temporal", self.channels)
        self.gate1 = GateConv(ctx, f"{name}.conv1.gate", self.channels)
        self.t_unit2 = TemporalUnit(ctx, f"{name}.conv2.temporal", self.channels)
        self.gate2 = GateConv(ctx, f"{name}.conv2.gate", self.channels)

    def _conv_pair(self, conv, t_unit, gate, x, flags):
        spatial = conv(x)
        if flags is None or not flags.temporal_conv or t_unit is None:
            return spatial
        f, h, w, c = x.data.shape
        temp = temporal_to_frames(
            t_unit(frames_to_temporal(x, f, c, h, w), flags.kernel_mode), f, c, h, w)
        return ops.add(spatial, ops.mul(gate(x), temp))

    def __call__(self, x, temb, flags=None):
        h = self._conv_pair(self.conv1, self.t_unit1, self.gate1,
                            ops.silu(self.gn1(x)), flags)
        shift = self.temb_proj(ops.silu(temb))
        h = ops.add(h, ops.reshape(shift, (shift.data.shape[0], 1, 1, -1)))
        h = self._conv_pair(self.conv2, self.t_unit2, self.gate2,
                            ops.silu(self.gn2(h)), flags)
        return ops.add(x, h)


class AttnBlock:
    """Self-attention + text cross-attention on spatial tokens.

    Video mode redirects self-attention keys/values to the first frame's
    tokens and appends a temporal-attention residual whose output
    projection starts at zero.
    """

    def __init__(self, ctx: BuildCtx, name: str, channels: int, text_width: int,
                 num_heads: int, norm_groups: int):
        if channels % num_heads != 0:
            raise ValidationError(
                f"attention: width {channels} not divisible by {num_heads} heads")
        self.channels = channels
        self.num_heads = num_heads
        self.gn1 = GroupNormA(ctx, f"{name}.gn1", channels, norm_groups)
        self.sq = Linear(ctx, f"{name}.sattn.q", channels, channels, bias=False)
        self.sk = Linear(ctx, f"{name}.sattn.k", channels, channels, bias=False)
        self.sv = Linear(ctx, f"{name}.sattn.v", channels, channels, bias=False)
        self.so = Linear(ctx, f"{name}.sattn.out", channels, channels)
        self.gn2 = GroupNormA(ctx, f"{name}.gn2", channels, norm_groups)
        self.cq = Linear(ctx, f"{name}.xattn.q", channels, channels, bias=False)
        self.ck = Linear(ctx, f"{name}.xattn.k", text_width, channels, bias=False)
        self.cv = Linear(ctx, f"{name}.xattn.v", text_width, channels, bias=False)
        self.co = Linear(ctx, f"{name}.xattn.out", channels, channels)
        # populated at inflation
        self.t_gn = None
        self.tq = self.tk = self.tv = self.tout = None

    def inflate(self, ctx: BuildCtx, name: str, norm_groups: int):
        c = self.channels
        self.t_gn = GroupNormA(ctx, f"{name}.tattn.gn", c, norm_groups,
                               group=f"{name}.tattn")
        self.tq = Linear(ctx, f"{name}.tattn.q", c, c, bias=False,
                         group=f"{name}.tattn")
        self.tk = Linear(ctx, f"{name}.tattn.k", c, c, bias=False,
                         group=f"{name}.tattn")
        self.tv = Linear(ctx, f"{name}.tattn.v", c, c, bias=False,
                         group=f"{name}.tattn")
        self.tout = Linear(ctx, f"{name}.tattn.out", c, c, zero_init=True,
                           group=f"{name}.tattn")

    def __call__(self, x, text_emb, flags=None):
        b, h, w, c = x.data.shape
        video = flags is not None
        tokens = lambda t: ops.reshape(t, (b, h * w, c))
        to_map = lambda t: ops.reshape(t, (b, h, w, c))

        tok = tokens(self.gn1(x))
        if video and flags.first_frame_attn:
            first = ops.tslice(tok, (slice(0, 1),))
            k = ops.broadcast_to(self.sk(first), (b, h * w, c))
            v = ops.broadcast_to(self.sv(first), (b, h * w, c))
        else:
            k, v = self.sk(tok), self.sv(tok)
        sa = self.so(ops.attention(self.sq(tok), k, v, self.num_heads))
        x = ops.add(x, to_map(sa))

        tok = tokens(self.gn2(x))
        if text_emb.data.shape[0] != b:
            text_emb = ops.broadcast_to(
                text_emb, (b,) + tuple(text_emb.data.shape[1:]))
        ca = self.co(ops.attention(self.cq(tok), self.ck(text_emb),
                                   self.cv(text_emb), self.num_heads))
        x = ops.add(x, to_map(ca))

        if video and flags.temporal_attn and self.tout is not None:
            tok = tokens(self.t_gn(x))
            tt = ops.transpose(tok, (1, 0, 2))  # (h*w, f, c)
            ta = self.tout(ops.attention(self.tq(tt), self.tk(tt), self.tv(tt),
                                         self.num_heads))
            x = ops.add(x, to_map(ops.transpose(ta, (1, 0, 2))))
        return x


class Downsample:
    def __init__(self, ctx: BuildCtx, name: str, c_in: int, c_out: int):
        self.conv = Conv2d(ctx, f"{name}.conv", c_in, c_out)

    def __call__(self, x):
        return self.conv(ops.avgpool2x(x))


class Upsample:
    def __init__(self, ctx: BuildCtx, name: str, c_in: int, c_out: int):
        self.conv = Conv2d(ctx, f"{name}.conv", c_in, c_out)

    def __call__(self, x):
        return self.conv(ops.upsample_nearest2x(x))
