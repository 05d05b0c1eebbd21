"""Differentiable primitives.

The catalog covers exactly what the model stack needs: affine maps,
stride-1 same-padded 2-D convolution, a 1-D temporal convolution with a
configurable output-index offset, group normalization, softmax, scaled
dot-product attention, SiLU/sigmoid, elementwise arithmetic, 2x
nearest-neighbor upsampling, 2x average pooling, shape views, and the
sinusoidal timestep embedding. Slicing / broadcasting / gather helpers
round out the view plumbing.

Every op is deterministic and dtype-preserving. Backward rules live next
to their forwards as closures; grad_check verifies each against central
finite differences.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatchError, ValidationError
from .tensor import Tensor, as_tensor, make_node, tracks_grad, unbroadcast

# temporal kernel window modes, fixed kernel size 3
SHIFT_MODES = ("shifted", "centered", "strict_two")


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        if tracks_grad(a):
            a._accumulate(unbroadcast(g, a.data.shape))
        if tracks_grad(b):
            b._accumulate(unbroadcast(g, b.data.shape))

    return make_node(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(g):
        if tracks_grad(a):
            a._accumulate(unbroadcast(g, a.data.shape))
        if tracks_grad(b):
            b._accumulate(unbroadcast(-g, b.data.shape))

    return make_node(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        if tracks_grad(a):
            a._accumulate(unbroadcast(g * b.data, a.data.shape))
        if tracks_grad(b):
            b._accumulate(unbroadcast(g * a.data, b.data.shape))

    return make_node(out, (a, b), backward)


def scale(a, s: float) -> Tensor:
    a = as_tensor(a)
    s = float(s)
    out = a.data * np.asarray(s, dtype=a.data.dtype)

    def backward(g):
        a._accumulate(g * np.asarray(s, dtype=g.dtype))

    return make_node(out, (a,), backward)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())
            return
        gk = g if keepdims else np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(gk, a.data.shape).copy())

    return make_node(out, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod(
        [a.data.shape[ax] for ax in np.atleast_1d(axis)])
    return scale(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


# -------------------------------------------------------------- nonlinearity

def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    # clip keeps exp() finite in float32; the tails saturate anyway
    z = np.exp(-np.clip(x, -60.0, 60.0))
    return 1.0 / (1.0 + z)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid_np(a.data)

    def backward(g):
        a._accumulate(g * out * (1.0 - out))

    return make_node(out, (a,), backward)


def silu(a) -> Tensor:
    a = as_tensor(a)
    s = _sigmoid_np(a.data)
    out = a.data * s

    def backward(g):
        a._accumulate(g * (s * (1.0 + a.data * (1.0 - s))))

    return make_node(out, (a,), backward)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        a._accumulate(out * (g - dot))

    return make_node(out, (a,), backward)


# -------------------------------------------------------------------- views

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    out = a.data.reshape(shape)

    def backward(g):
        a._accumulate(g.reshape(a.data.shape))

    return make_node(out, (a,), backward)


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = np.ascontiguousarray(a.data.transpose(axes))

    def backward(g):
        a._accumulate(np.ascontiguousarray(g.transpose(inv)))

    return make_node(out, (a,), backward)


def tslice(a, key) -> Tensor:
    """Basic slicing; backward scatters into a zero buffer."""
    a = as_tensor(a)
    out = a.data[key]

    def backward(g):
        buf = np.zeros_like(a.data)
        buf[key] = g
        a._accumulate(buf)

    return make_node(out, (a,), backward)


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    out = np.broadcast_to(a.data, shape)

    def backward(g):
        a._accumulate(unbroadcast(g, a.data.shape))

    return make_node(np.ascontiguousarray(out), (a,), backward)


def embedding(table, ids: np.ndarray) -> Tensor:
    """Row lookup, differentiable w.r.t. the table."""
    table = as_tensor(table)
    ids = np.asarray(ids)
    out = table.data[ids]

    def backward(g):
        buf = np.zeros_like(table.data)
        np.add.at(buf, ids, g)
        table._accumulate(buf)

    return make_node(out, (table,), backward)


# ------------------------------------------------------------ linear algebra

def matmul(a, b) -> Tensor:
    """Batched matrix product with numpy broadcasting on batch dims."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatchError(
            f"matmul: need >=2-D operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatchError(
            f"matmul: inner dims of {a.data.shape} and {b.data.shape} differ")
    out = a.data @ b.data

    def backward(g):
        if tracks_grad(a):
            a._accumulate(unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        if tracks_grad(b):
            b._accumulate(unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return make_node(out, (a, b), backward)


def linear(x, w, b=None) -> Tensor:
    """x @ w + b over the trailing axis; x is (..., k), w is (k, m)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeMismatchError(
            f"linear: input {x.data.shape} does not match weight {w.data.shape}")
    lead = x.data.shape[:-1]
    x2 = x.data.reshape(-1, x.data.shape[-1])
    y2 = x2 @ w.data
    if b is not None:
        b = as_tensor(b)
        y2 = y2 + b.data
    out = y2.reshape(*lead, w.data.shape[1])
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g2 = g.reshape(-1, g.shape[-1])
        if tracks_grad(x):
            x._accumulate((g2 @ w.data.T).reshape(x.data.shape))
        if tracks_grad(w):
            w._accumulate(x2.T @ g2)
        if b is not None and tracks_grad(b):
            b._accumulate(g2.sum(axis=0))

    return make_node(out, parents, backward)


# -------------------------------------------------------------- convolutions

def _pad_cl(xt: np.ndarray, ph: int, pw: int) -> np.ndarray:
    if ph == 0 and pw == 0:
        return xt
    return np.pad(xt, ((0, 0), (ph, ph), (pw, pw), (0, 0)))


def _conv2d_raw(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-tap GEMM over the whole padded plane, then shifted accumulation.

    Channels-last throughout; avoids im2col's k^2-fold gather copy: each
    kernel tap multiplies the contiguous input once and the tap results
    are summed over shifted window views.
    """
    o, c, kh, kw = w.shape
    bsz, h, wd, _ = x.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = _pad_cl(x, ph, pw)
    xf = xp.reshape(-1, c)
    wt = np.ascontiguousarray(w.transpose(2, 3, 1, 0))  # (kh, kw, c, o)
    y = np.zeros((bsz, h, wd, o), dtype=x.dtype)
    for u in range(kh):
        for v in range(kw):
            zk = (xf @ wt[u, v]).reshape(bsz, h + 2 * ph, wd + 2 * pw, o)
            y += zk[:, u:u + h, v:v + wd, :]
    return y


def _conv2d_wgrad(x: np.ndarray, g: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """dW for the same-padded conv: per-tap GEMM of input windows x grads."""
    bsz, h, wd, c = x.shape
    o = g.shape[-1]
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = _pad_cl(x, ph, pw)
    gf = g.reshape(-1, o)
    dw = np.empty((kh, kw, c, o), dtype=g.dtype)
    for u in range(kh):
        for v in range(kw):
            xs = np.ascontiguousarray(xp[:, u:u + h, v:v + wd, :]).reshape(-1, c)
            dw[u, v] = xs.T @ gf
    return np.ascontiguousarray(dw.transpose(3, 2, 0, 1))


def conv2d(x, w, b=None) -> Tensor:
    """Stride-1, same-zero-padded 2-D convolution, channels-last.

    x is (b, h, w, c_in); w is (c_out, c_in, kh, kw) with odd kernel sides.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeMismatchError(
            f"conv2d: need 4-D input and kernel, got {x.data.shape} and {w.data.shape}")
    if x.data.shape[-1] != w.data.shape[1]:
        raise ShapeMismatchError(
            f"conv2d: input {x.data.shape} does not match kernel {w.data.shape}")
    kh, kw = w.data.shape[2:]
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValidationError(f"conv2d: kernel sides must be odd, got {(kh, kw)}")
    out = _conv2d_raw(x.data, w.data)
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g = np.ascontiguousarray(g)
        if tracks_grad(w):
            w._accumulate(_conv2d_wgrad(x.data, g, kh, kw))
        if tracks_grad(x):
            w_flip = np.ascontiguousarray(w.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
            x._accumulate(_conv2d_raw(g, w_flip))
        if b is not None and tracks_grad(b):
            b._accumulate(g.reshape(-1, g.shape[-1]).sum(axis=0))

    return make_node(out, parents, backward)


def temporal_conv1d(x, kernel, mode: str = "shifted") -> Tensor:
    """Depthwise size-3 convolution along the last axis of (n, c, f).

    Window per output index j (1-based frames):
      shifted    {j-2, j-1, j}   two replicate pads of the first frame
      centered   {j-1, j, j+1}   one replicate pad at each end
      strict_two {j-2, j-1}      tap 2 of the kernel is unused

    The shifted mode realizes next-frame prediction inside the operator:
    as the kernel slides it writes to the index one past the window
    center, so frame j is produced from its two predecessors and itself.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.data.ndim != 3:
        raise ShapeMismatchError(f"temporal_conv1d: need (n, c, f), got {x.data.shape}")
    n, c, f = x.data.shape
    if kernel.data.shape != (c, 3):
        raise ShapeMismatchError(
            f"temporal_conv1d: kernel {kernel.data.shape} does not match channels {c}")
    if mode not in SHIFT_MODES:
        raise ValidationError(f"temporal_conv1d: unknown mode {mode!r}")

    if mode == "centered":
        left, right, taps = 1, 1, (0, 1, 2)
    else:
        left, right, taps = 2, 0, ((0, 1) if mode == "strict_two" else (0, 1, 2))
    pads_l = [x.data[:, :, :1]] * left
    pads_r = [x.data[:, :, -1:]] * right
    xp = np.concatenate(pads_l + [x.data] + pads_r, axis=2)

    k = kernel.data
    out = np.zeros((n, c, f), dtype=x.data.dtype)
    for t in taps:
        out += k[None, :, t, None] * xp[:, :, t:t + f]

    def backward(g):
        if tracks_grad(kernel):
            gk = np.zeros_like(kernel.data)
            for t in taps:
                gk[:, t] = (g * xp[:, :, t:t + f]).sum(axis=(0, 2))
            kernel._accumulate(gk)
        if tracks_grad(x):
            gxp = np.zeros_like(xp)
            for t in taps:
                gxp[:, :, t:t + f] += k[None, :, t, None] * g
            gx = gxp[:, :, left:left + f].copy()
            # fold replicate pads back onto the boundary frames
            if left:
                gx[:, :, 0] += gxp[:, :, :left].sum(axis=2)
            if right:
                gx[:, :, -1] += gxp[:, :, left + f:].sum(axis=2)
            x._accumulate(gx)

    return make_node(out, (x, kernel), backward)


# ------------------------------------------------------------- normalization

def group_norm(x, groups: int, eps: float = 1e-5) -> Tensor:
    """Per-sample group normalization, channels-last, no affine.

    x is (b, ..., c); statistics are taken per sample over all positions
    and the channels of each group.
    """
    x = as_tensor(x)
    if x.data.ndim < 2:
        raise ShapeMismatchError(f"group_norm: need (b, ..., c), got {x.data.shape}")
    shp = x.data.shape
    bsz, c = shp[0], shp[-1]
    if c % groups != 0:
        raise ValidationError(f"group_norm: channels {c} not divisible by groups {groups}")
    cg = c // groups
    xg = x.data.reshape(bsz, -1, groups, cg)
    n = xg.shape[1] * cg
    # contiguous inner-axis partial sums, then the tiny spatial reduction
    s1 = xg.sum(axis=3).sum(axis=1, keepdims=True)[:, :, :, None]
    s2 = (xg * xg).sum(axis=3).sum(axis=1, keepdims=True)[:, :, :, None]
    mu = s1 / n
    var = np.maximum(s2 / n - mu * mu, 0.0)
    inv = (1.0 / np.sqrt(var + eps)).astype(x.data.dtype)
    xhat = (xg - mu.astype(x.data.dtype)) * inv
    out = xhat.reshape(shp)

    def backward(g):
        gg = g.reshape(bsz, -1, groups, cg)
        m1 = gg.sum(axis=3).sum(axis=1, keepdims=True)[:, :, :, None] / n
        m2 = ((gg * xhat).sum(axis=3).sum(axis=1, keepdims=True)[:, :, :, None] / n)
        x._accumulate((inv * (gg - m1 - xhat * m2)).reshape(shp))

    return make_node(out, (x,), backward)


# ---------------------------------------------------------------- resampling

def upsample_nearest2x(x) -> Tensor:
    """2x nearest-neighbor upsampling of (b, h, w, c)."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeMismatchError(f"upsample_nearest2x: need 4-D, got {x.data.shape}")
    out = x.data.repeat(2, axis=1).repeat(2, axis=2)

    def backward(g):
        b, h2, w2, c = g.shape
        x._accumulate(g.reshape(b, h2 // 2, 2, w2 // 2, 2, c).sum(axis=(2, 4)))

    return make_node(out, (x,), backward)


def avgpool2x(x) -> Tensor:
    """2x average pooling of (b, h, w, c); spatial extents must be even."""
    x = as_tensor(x)
    if x.data.ndim != 4:
        raise ShapeMismatchError(f"avgpool2x: need 4-D, got {x.data.shape}")
    b, h, w, c = x.data.shape
    if h % 2 or w % 2:
        raise ShapeMismatchError(f"avgpool2x: odd spatial extents in {x.data.shape}")
    out = x.data.reshape(b, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))

    def backward(g):
        quarter = np.asarray(0.25, dtype=g.dtype)
        x._accumulate((g * quarter).repeat(2, axis=1).repeat(2, axis=2))

    return make_node(out, (x,), backward)


# ----------------------------------------------------------------- attention

def attention(q, k, v, num_heads: int = 1) -> Tensor:
    """Scaled dot-product attention over token axis -2.

    q is (..., tq, c); k and v are (..., tk, c) with matching batch dims.
    Heads split the channel axis; c must divide evenly.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    c = q.data.shape[-1]
    if c % num_heads != 0:
        raise ValidationError(f"attention: width {c} not divisible by {num_heads} heads")
    if k.data.shape[-1] != c or v.data.shape[-1] != c:
        raise ShapeMismatchError(
            f"attention: widths differ: q {q.data.shape}, k {k.data.shape}, v {v.data.shape}")
    dh = c // num_heads

    def split(t):
        lead = t.data.shape[:-2]
        tn = t.data.shape[-2]
        t = reshape(t, lead + (tn, num_heads, dh))
        perm = tuple(range(len(lead))) + (len(lead) + 1, len(lead), len(lead) + 2)
        return transpose(t, perm)  # (..., heads, tokens, dh)

    qh, kh_, vh = split(q), split(k), split(v)
    scores = scale(matmul(qh, transpose(kh_, _swap_last2(kh_.data.ndim))), 1.0 / math.sqrt(dh))
    att = softmax(scores, axis=-1)
    oh = matmul(att, vh)  # (..., heads, tq, dh)
    lead = q.data.shape[:-2]
    perm = tuple(range(len(lead))) + (len(lead) + 1, len(lead), len(lead) + 2)
    out = transpose(oh, perm)
    return reshape(out, lead + (q.data.shape[-2], c))


def _swap_last2(ndim: int):
    axes = list(range(ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return tuple(axes)


# ----------------------------------------------------------------- embedding

def timestep_embedding(t, dim: int) -> Tensor:
    """Sinusoidal embedding of (possibly fractional) timesteps, shape (b, dim)."""
    if dim % 2 != 0:
        raise ValidationError(f"timestep_embedding: dim must be even, got {dim}")
    t = as_tensor(t)
    tv = np.atleast_1d(t.data).astype(t.data.dtype)
    half = dim // 2
    freqs = np.exp(
        -math.log(10000.0) * np.arange(half, dtype=tv.dtype) / max(half - 1, 1))
    ang = tv[:, None] * freqs[None, :]
    out = np.concatenate([np.sin(ang), np.cos(ang)], axis=1)

    def backward(g):
        gs, gc = g[:, :half], g[:, half:]
        gt = (gs * np.cos(ang) * freqs - gc * np.sin(ang) * freqs).sum(axis=1)
        t._accumulate(gt.reshape(t.data.shape))

    return make_node(out, (t,), backward)


# ------------------------------------------------------------------- catalog

def op_catalog() -> dict:
    """The differentiable primitive set, keyed by public name."""
    return {
        "linear": linear,
        "matmul": matmul,
        "conv2d": conv2d,
        "temporal_conv1d": temporal_conv1d,
        "group_norm": group_norm,
        "softmax": softmax,
        "attention": attention,
        "silu": silu,
        "sigmoid": sigmoid,
        "add": add,
        "mul": mul,
        "upsample_nearest2x": upsample_nearest2x,
        "avgpool2x": avgpool2x,
        "reshape": reshape,
        "transpose": transpose,
        "timestep_embedding": timestep_embedding,
    }
