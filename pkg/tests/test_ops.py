"""Primitive operator semantics."""

import numpy as np
import pytest

from fewmotion.errors import ShapeMismatchError, ValidationError
from fewmotion.numerics import Tensor, ops, no_grad, op_catalog


def test_sigmoid_at_zero():
    assert ops.sigmoid(Tensor(0.0)).data == 0.5


def test_sigmoid_saturation_finite():
    y = ops.sigmoid(Tensor(np.array([-1e4, 1e4], dtype=np.float32)))
    assert np.all(np.isfinite(y.data))
    assert y.data[0] == 0.0 and y.data[1] == 1.0


def test_conv2d_dirac_kernel_is_identity(rng):
    x = rng.standard_normal((2, 6, 6, 3)).astype(np.float32)
    w = np.zeros((3, 3, 3, 3), dtype=np.float32)
    for c in range(3):
        w[c, c, 1, 1] = 1.0
    y = ops.conv2d(Tensor(x), Tensor(w))
    np.testing.assert_array_equal(y.data, x)


def test_conv2d_shape_mismatch_reports_both_shapes(rng):
    x = Tensor(rng.standard_normal((1, 4, 4, 3)))
    w = Tensor(rng.standard_normal((2, 5, 3, 3)))
    with pytest.raises(ShapeMismatchError) as e:
        ops.conv2d(x, w)
    assert "(1, 4, 4, 3)" in str(e.value) and "(2, 5, 3, 3)" in str(e.value)


def test_group_norm_constant_field_maps_to_zero():
    x = Tensor(np.full((2, 3, 3, 4), 7.5))
    y = ops.group_norm(x, groups=2)
    assert np.abs(y.data).max() < 1e-8


def test_reshape_transpose_roundtrip_exact(rng):
    x = rng.standard_normal((3, 4, 5))
    t = Tensor(x)
    back = ops.transpose(ops.transpose(t, (2, 0, 1)), (1, 2, 0))
    np.testing.assert_array_equal(back.data, x)
    r = ops.reshape(ops.reshape(t, (12, 5)), (3, 4, 5))
    np.testing.assert_array_equal(r.data, x)


def test_primitives_bit_deterministic(rng):
    x = rng.standard_normal((4, 6, 6, 8)).astype(np.float32)
    w = rng.standard_normal((8, 8, 3, 3)).astype(np.float32)
    a = ops.conv2d(Tensor(x), Tensor(w)).data
    b = ops.conv2d(Tensor(x), Tensor(w)).data
    np.testing.assert_array_equal(a, b)
    s1 = ops.softmax(Tensor(x), axis=-1).data
    s2 = ops.softmax(Tensor(x), axis=-1).data
    np.testing.assert_array_equal(s1, s2)


class TestTemporalConv:
    def test_selector_kernel_shifts_by_two(self, rng):
        # kernel (1, 0, 0) picks x[j-2]; frames 1, 2 replicate frame 1
        f = 6
        x = rng.standard_normal((2, 3, f))
        k = np.zeros((3, 3))
        k[:, 0] = 1.0
        y = ops.temporal_conv1d(Tensor(x), Tensor(k), "shifted").data
        np.testing.assert_allclose(y[:, :, 0], x[:, :, 0])
        np.testing.assert_allclose(y[:, :, 1], x[:, :, 0])
        np.testing.assert_allclose(y[:, :, 2:], x[:, :, :f - 2])

    def test_causality_of_shifted_window(self, rng):
        x = rng.standard_normal((1, 2, 6))
        k = rng.standard_normal((2, 3))
        base = ops.temporal_conv1d(Tensor(x), Tensor(k), "shifted").data
        x2 = x.copy()
        x2[:, :, 4] += 10.0
        pert = ops.temporal_conv1d(Tensor(x2), Tensor(k), "shifted").data
        np.testing.assert_array_equal(base[:, :, :4], pert[:, :, :4])
        assert np.abs(base[:, :, 4:] - pert[:, :, 4:]).max() > 0

    def test_sliding_window_oracle(self, rng):
        # random 1-channel, f=4 against a direct loop
        x = rng.standard_normal((1, 1, 4))
        k = rng.standard_normal((1, 3))
        y = ops.temporal_conv1d(Tensor(x), Tensor(k), "shifted").data
        xp = np.concatenate([x[:, :, :1], x[:, :, :1], x], axis=2)[0, 0]
        expect = [sum(k[0, t] * xp[j + t] for t in range(3)) for j in range(4)]
        np.testing.assert_allclose(y[0, 0], expect, rtol=1e-12)

    def test_strict_two_mode_ignores_current_frame(self, rng):
        x = rng.standard_normal((1, 2, 5))
        k = rng.standard_normal((2, 3))
        y = ops.temporal_conv1d(Tensor(x), Tensor(k), "strict_two").data
        x2 = x.copy()
        x2[:, :, 3] += 5.0
        y2 = ops.temporal_conv1d(Tensor(x2), Tensor(k), "strict_two").data
        np.testing.assert_array_equal(y[:, :, 3], y2[:, :, 3])

    def test_unknown_mode_rejected(self, rng):
        with pytest.raises(ValidationError):
            ops.temporal_conv1d(Tensor(np.zeros((1, 2, 4))),
                                Tensor(np.zeros((2, 3))), "sideways")


def test_attention_matches_bruteforce_softmax():
    # 2 tokens, d=2, hand-set values, one head
    q = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    k = np.array([[[1.0, 1.0], [0.0, 2.0]]])
    v = np.array([[[1.0, 2.0], [3.0, 4.0]]])
    out = ops.attention(Tensor(q), Tensor(k), Tensor(v), num_heads=1).data
    scores = q[0] @ k[0].T / np.sqrt(2.0)
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    att = e / e.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(out[0], att @ v[0], rtol=1e-12)


def test_attention_head_divisibility():
    x = Tensor(np.zeros((1, 2, 6)))
    with pytest.raises(ValidationError):
        ops.attention(x, x, x, num_heads=4)


def test_timestep_embedding_structure():
    emb = ops.timestep_embedding(Tensor(np.array([0.0, 3.0])), 8).data
    assert emb.shape == (2, 8)
    np.testing.assert_allclose(emb[0, :4], 0.0, atol=1e-12)
    np.testing.assert_allclose(emb[0, 4:], 1.0, atol=1e-12)


def test_catalog_contents():
    cat = op_catalog()
    for name in ["linear", "conv2d", "temporal_conv1d", "group_norm", "softmax",
                 "attention", "silu", "sigmoid", "add", "mul",
                 "upsample_nearest2x", "avgpool2x", "reshape", "transpose",
                 "timestep_embedding"]:
        assert name in cat


def test_backward_through_composition(rng):
    x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    y = ops.mean(ops.mul(ops.silu(x), ops.silu(x)))
    y.backward()
    assert x.grad is not None and x.grad.shape == (3, 4)


def test_no_grad_disables_tape(rng):
    x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    with no_grad():
        y = ops.mean(ops.mul(x, x))
    assert y._backward is None and y._parents == ()
