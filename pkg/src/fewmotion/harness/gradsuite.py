"""Gradient verification for the composite model layers.

Builds tiny float64 instances of the real blocks (temporal-spatial conv
pair, first-frame attention, temporal attention, full residual block)
and finite-difference-checks the gradient of every parameter and input
element. Parameters are randomized around their init unless the
zero-init variant is requested, which checks that gradients at the
zero-initialized point are finite and correct.
"""

from __future__ import annotations

import numpy as np

from ..numerics import Tensor, grad_check_leaves, run_catalog_checks
from ..numerics.gradcheck import GradReport
from ..model.layers import AttnBlock, BuildCtx, ResBlock
from ..model.registry import ParamRegistry
from ..model.spec import VideoModeFlags

TINY = dict(channels=4, f=3, h=4, w=4, heads=2, text_w=4, time_w=6, groups=2)


def _build_resblock(seed: int, randomize: bool):
    reg = ParamRegistry()
    rng = np.random.default_rng(seed)
    ctx = BuildCtx(reg, rng, dtype=np.float64)
    rb = ResBlock(ctx, "rb", TINY["channels"], TINY["time_w"], TINY["groups"])
    rb.inflate(ctx, "rb")
    leaves = [e.tensor for e in reg.entries.values()]
    if randomize:
        for t in leaves:
            t.data = t.data + 0.25 * rng.standard_normal(t.data.shape)
    pair_leaves = [e.tensor for n, e in reg.entries.items()
                   if n.startswith("rb.conv1")]
    return rb, leaves, pair_leaves


def _build_attnblock(seed: int, randomize: bool) -> tuple[AttnBlock, list[Tensor]]:
    reg = ParamRegistry()
    rng = np.random.default_rng(seed)
    ctx = BuildCtx(reg, rng, dtype=np.float64)
    ab = AttnBlock(ctx, "ab", TINY["channels"], TINY["text_w"], TINY["heads"],
                   TINY["groups"])
    ab.inflate(ctx, "ab", TINY["groups"])
    leaves = [e.tensor for e in reg.entries.values()]
    if randomize:
        for t in leaves:
            t.data = t.data + 0.25 * rng.standard_normal(t.data.shape)
    return ab, leaves


def composite_reports(seeds=range(5), eps: float = 1e-5,
                      tol: float = 1e-4) -> list[GradReport]:
    reports = []
    c, f, h, w = TINY["channels"], TINY["f"], TINY["h"], TINY["w"]
    for seed in seeds:
        rng = np.random.default_rng(seed + 5150)
        x = Tensor(rng.standard_normal((f, h, w, c)), requires_grad=True)
        temb = Tensor(rng.standard_normal((f, TINY["time_w"])), requires_grad=True)
        text = Tensor(rng.standard_normal((1, 2, TINY["text_w"])), requires_grad=True)

        rb, ps, pair_ps = _build_resblock(seed, randomize=True)
        flags = VideoModeFlags()
        reports.append(grad_check_leaves(
            lambda: rb._conv_pair(rb.conv1, rb.t_unit1, rb.gate1, x, flags),
            [x] + pair_ps, seed=seed, eps=eps, tol=tol,
            name=f"temporal_spatial_layer (seed {seed})"))
        reports.append(grad_check_leaves(
            lambda: rb(x, temb, flags), [x, temb] + ps, seed=seed, eps=eps,
            tol=tol, name=f"residual_block video (seed {seed})"))

        rb0, ps0, _ = _build_resblock(seed, randomize=False)
        reports.append(grad_check_leaves(
            lambda: rb0(x, temb, flags), [x, temb] + ps0, seed=seed, eps=eps,
            tol=tol, name=f"residual_block zero-init (seed {seed})"))

        ab, aps = _build_attnblock(seed, randomize=True)
        ff = VideoModeFlags(first_frame_attn=True, temporal_conv=False,
                            temporal_attn=False)
        reports.append(grad_check_leaves(
            lambda: ab(x, text, ff), [x, text] + aps, seed=seed, eps=eps,
            tol=tol, name=f"first_frame_attention (seed {seed})"))
        ta = VideoModeFlags(first_frame_attn=False, temporal_conv=False,
                            temporal_attn=True)
        reports.append(grad_check_leaves(
            lambda: ab(x, text, ta), [x, text] + aps, seed=seed, eps=eps,
            tol=tol, name=f"temporal_attention (seed {seed})"))
    return reports


def full_suite(seeds=range(5), eps: float = 1e-5, tol: float = 1e-4):
    """Primitives plus composite layers; the acceptance gradient gate."""
    return run_catalog_checks(seeds=seeds, eps=eps, tol=tol) + \
        composite_reports(seeds=seeds, eps=eps, tol=tol)
