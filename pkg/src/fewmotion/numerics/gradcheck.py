"""Finite-difference verification of reverse-mode gradients.

The checked function is reduced to a scalar through a fixed random
projection; the tape's gradient is compared against central differences
evaluated at float64. The relative error denominator is
max(|analytic|, |numeric|, 1e-8) so zero entries compare by absolute
error.

Two entry points: grad_check draws fresh leaf inputs from shapes;
grad_check_leaves verifies an arbitrary callable against an explicit
list of leaf tensors (used for composite model layers, whose parameters
are the leaves).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .tensor import Tensor, no_grad
from . import ops

DEFAULT_TOL = 1e-4


@dataclass
class GradReport:
    op_name: str
    max_rel_err: float
    max_abs_err: float
    passed: bool
    detail: str = ""

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        line = (f"{self.op_name:<44s} {status}  rel={self.max_rel_err:.3e}"
                f"  abs={self.max_abs_err:.3e}")
        return line + (f"  [{self.detail}]" if self.detail else "")


@dataclass
class CheckCase:
    """A named differentiable function plus the shapes of its leaf inputs."""
    name: str
    fn: object                      # callable(*tensors) -> Tensor
    input_shapes: list = field(default_factory=list)
    init: object = None             # optional callable(rng) -> list[np.ndarray]


def grad_check_leaves(fn, leaves: list[Tensor], seed: int = 0, eps: float = 1e-5,
                      tol: float = DEFAULT_TOL, name: str = "op") -> GradReport:
    """Verify d(fn)/d(leaf) for every element of every leaf tensor.

    Leaves must be float64 for the finite differences to resolve; their
    .data is perturbed in place and restored.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValidationError(f"grad_check: eps {eps} outside [1e-7, 1e-3]")
    for lf in leaves:
        if lf.data.dtype != np.float64:
            raise ValidationError("grad_check: leaves must be float64")
        lf.requires_grad = True
        lf.grad = None

    proj_rng = np.random.default_rng(seed + 977)
    out = fn()
    if not np.isfinite(out.data).all():
        return GradReport(name, np.inf, np.inf, False, "non-finite forward output")
    proj = proj_rng.standard_normal(out.data.shape)
    loss = ops.sum_(ops.mul(out, Tensor(proj)))
    loss.backward()
    analytic = [lf.grad if lf.grad is not None else np.zeros_like(lf.data)
                for lf in leaves]
    for lf in leaves:
        lf.grad = None

    def forward_scalar() -> float:
        with no_grad():
            val = fn()
        return float((val.data * proj).sum())

    max_rel = 0.0
    max_abs = 0.0
    detail = ""
    for i, lf in enumerate(leaves):
        flat = lf.data.reshape(-1)
        num = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            fp = forward_scalar()
            flat[j] = orig - eps
            fm = forward_scalar()
            flat[j] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                return GradReport(name, np.inf, np.inf, False,
                                  f"non-finite forward at leaf {i} element {j}")
            num[j] = (fp - fm) / (2.0 * eps)
        ana = analytic[i].reshape(-1)
        abs_err = np.abs(ana - num)
        denom = np.maximum(np.maximum(np.abs(ana), np.abs(num)), 1e-8)
        rel_err = abs_err / denom
        k = int(rel_err.argmax())
        if rel_err[k] > max_rel:
            max_rel = float(rel_err[k])
            detail = f"worst at leaf {i} element {k}"
        max_abs = max(max_abs, float(abs_err.max()))
    return GradReport(name, max_rel, max_abs, max_rel < tol,
                      detail if max_rel >= tol else "")


def grad_check(fn, input_shapes, seed: int = 0, eps: float = 1e-5,
               tol: float = DEFAULT_TOL, name: str | None = None,
               init=None) -> GradReport:
    """grad_check_leaves with inputs drawn from a seeded standard normal."""
    name = name or getattr(fn, "__name__", "op")
    rng = np.random.default_rng(seed)
    if init is not None:
        raw = [np.asarray(a, dtype=np.float64) for a in init(rng)]
    else:
        raw = [rng.standard_normal(s) for s in input_shapes]
    leaves = [Tensor(a, requires_grad=True) for a in raw]
    return grad_check_leaves(lambda: fn(*leaves), leaves, seed=seed, eps=eps,
                             tol=tol, name=name)


def primitive_cases() -> list[CheckCase]:
    """Small canonical shapes for every catalog primitive."""
    return [
        CheckCase("linear (4,8)x(8,3)", lambda x, w, b: ops.linear(x, w, b),
                  [(4, 8), (8, 3), (3,)]),
        CheckCase("matmul batched", lambda a, b: ops.matmul(a, b),
                  [(2, 3, 4), (2, 4, 5)]),
        CheckCase("matmul broadcast kv", lambda a, b: ops.matmul(a, b),
                  [(3, 2, 4), (1, 4, 2)]),
        CheckCase("conv2d 3x3", lambda x, w, b: ops.conv2d(x, w, b),
                  [(2, 5, 5, 3), (4, 3, 3, 3), (4,)]),
        CheckCase("conv2d 1x1", lambda x, w: ops.conv2d(x, w),
                  [(2, 4, 4, 3), (2, 3, 1, 1)]),
        CheckCase("temporal_conv1d shifted",
                  lambda x, k: ops.temporal_conv1d(x, k, "shifted"),
                  [(3, 2, 5), (2, 3)]),
        CheckCase("temporal_conv1d centered",
                  lambda x, k: ops.temporal_conv1d(x, k, "centered"),
                  [(3, 2, 5), (2, 3)]),
        CheckCase("temporal_conv1d strict_two",
                  lambda x, k: ops.temporal_conv1d(x, k, "strict_two"),
                  [(3, 2, 5), (2, 3)]),
        CheckCase("group_norm g=2", lambda x: ops.group_norm(x, 2), [(2, 3, 3, 4)]),
        CheckCase("softmax", lambda x: ops.softmax(x, axis=-1), [(3, 5)]),
        CheckCase("attention 2tok d4",
                  lambda q, k, v: ops.attention(q, k, v, num_heads=2),
                  [(1, 2, 4), (1, 2, 4), (1, 2, 4)]),
        CheckCase("silu", ops.silu, [(4, 5)]),
        CheckCase("sigmoid", ops.sigmoid, [(4, 5)]),
        CheckCase("add broadcast", lambda a, b: ops.add(a, b), [(3, 4), (4,)]),
        CheckCase("mul broadcast", lambda a, b: ops.mul(a, b), [(3, 1, 4), (2, 4)]),
        CheckCase("upsample_nearest2x", ops.upsample_nearest2x, [(1, 3, 3, 2)]),
        CheckCase("avgpool2x", ops.avgpool2x, [(1, 4, 4, 2)]),
        CheckCase("reshape+transpose",
                  lambda x: ops.reshape(ops.transpose(x, (1, 0, 2)), (6, 4)),
                  [(2, 3, 4)]),
        CheckCase("tslice", lambda x: ops.tslice(x, (slice(1, 3),)), [(4, 3)]),
        CheckCase("broadcast_to", lambda x: ops.broadcast_to(x, (4, 3, 2)), [(1, 3, 2)]),
        CheckCase("timestep_embedding", lambda t: ops.timestep_embedding(t, 8), [(3,)]),
    ]


def run_catalog_checks(seeds=range(5), eps: float = 1e-5,
                       tol: float = DEFAULT_TOL,
                       extra_cases: list[CheckCase] | None = None) -> list[GradReport]:
    """grad_check every primitive (and any extra composite cases) per seed."""
    reports = []
    cases = primitive_cases() + list(extra_cases or [])
    for case in cases:
        for seed in seeds:
            reports.append(grad_check(
                case.fn, case.input_shapes, seed=seed, eps=eps, tol=tol,
                name=f"{case.name} (seed {seed})", init=case.init))
    return reports
