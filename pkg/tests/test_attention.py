import numpy as np
import pytest
import torch

from network.attention import (
    ClassificationGate, SpatialSelfAttention, classification_gated_attention, spatial_self_attention
)
from utils.error_handlers import ShapeError


def _dense_oracle(x, wq, bq, wk, bk, wv, bv):
    """Explicit per-position embeddings, N×N softmax and matmul in numpy float64"""
    batch, channels, height, width = x.shape
    n = height * width
    out = np.empty_like(x)
    for b in range(batch):
        flat = x[b].reshape(channels, n).T                      # N × C
        query = flat @ wq[:, :, 0, 0].T + bq                    # N × C'
        key = flat @ wk[:, :, 0, 0].T + bk
        value = flat @ wv[:, :, 0, 0].T + bv                    # N × C
        similarity = query @ key.T
        similarity -= similarity.max(axis=1, keepdims=True)
        weights = np.exp(similarity)
        weights /= weights.sum(axis=1, keepdims=True)
        out[b] = (weights @ value + flat).T.reshape(channels, height, width)
    return out


def _random_params(rng, channels, embed):
    return [
        rng.normal(size=(embed, channels, 1, 1)), rng.normal(size=embed),
        rng.normal(size=(embed, channels, 1, 1)), rng.normal(size=embed),
        rng.normal(size=(channels, channels, 1, 1)), rng.normal(size=channels),
    ]


def _tensors(arrays):
    return [torch.from_numpy(np.asarray(a, dtype=np.float64)) for a in arrays]


# --- classification_gated_attention ---

def test_gate_with_zero_alpha_is_identity():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        A = torch.from_numpy(rng.normal(size=(2, 1, 3, 3)))
        s = torch.from_numpy(rng.random(2))
        assert torch.equal(classification_gated_attention(A, s, 0.0), A)


def test_gate_equals_scaled_input():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        A = torch.from_numpy(rng.normal(size=(2, 1, 3, 3)))
        s = torch.from_numpy(rng.random(2))
        alpha = float(rng.normal())
        expected = (1.0 + alpha * s.view(-1, 1, 1, 1)) * A
        torch.testing.assert_close(classification_gated_attention(A, s, alpha), expected,
                                   rtol=0, atol=1e-12)


@pytest.mark.parametrize("alpha, s, a, expected", [
    (0.5, 1.0, 2.0, 3.0),
    (1.0, 0.25, -4.0, -5.0),
])
def test_gate_worked_examples(alpha, s, a, expected):
    A = np.array([[a]])
    np.testing.assert_allclose(classification_gated_attention(A, s, alpha), [[expected]])


def test_gate_is_homogeneous_in_A():
    A = torch.randn(3, 1, 4, 4, dtype=torch.float64)
    s = torch.rand(3, dtype=torch.float64)
    torch.testing.assert_close(classification_gated_attention(2.5 * A, s, 0.7),
                               2.5 * classification_gated_attention(A, s, 0.7))


def test_gate_module_starts_at_zero():
    gate = ClassificationGate()
    assert gate.alpha.item() == 0.0
    A = torch.randn(2, 1, 4, 4)
    assert torch.equal(gate(A, torch.rand(2)), A)


def test_gate_rejects_probability_count_mismatch():
    with pytest.raises(ShapeError):
        classification_gated_attention(torch.zeros(2, 1, 3, 3), torch.zeros(3), 0.1)


def test_gate_gradcheck():
    for seed in range(20):
        generator = torch.Generator().manual_seed(seed)
        A = torch.randn(2, 1, 3, 3, dtype=torch.float64, generator=generator, requires_grad=True)
        s = torch.rand(2, dtype=torch.float64, generator=generator, requires_grad=True)
        alpha = torch.randn((), dtype=torch.float64, generator=generator, requires_grad=True)
        assert torch.autograd.gradcheck(classification_gated_attention, (A, s, alpha),
                                        eps=1e-5, atol=1e-8, rtol=1e-4)


# --- spatial_self_attention ---

def test_self_attention_matches_dense_oracle():
    rng = np.random.default_rng(2)
    for _ in range(100):
        channels = int(rng.integers(1, 9))
        embed = int(rng.integers(1, channels + 1))
        height, width = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        x = rng.normal(size=(2, channels, height, width))
        params = _random_params(rng, channels, embed)
        expected = _dense_oracle(x, *params)
        actual = spatial_self_attention(*_tensors([x] + params)).numpy()
        np.testing.assert_allclose(actual, expected, rtol=1e-6, atol=1e-9)


def test_self_attention_rows_sum_to_one():
    block = SpatialSelfAttention(8, 2).double()
    x = torch.randn(3, 8, 5, 4, dtype=torch.float64)
    attention = block.attention_map(x)
    assert attention.shape == (3, 20, 20)
    torch.testing.assert_close(attention.sum(dim=-1), torch.ones(3, 20, dtype=torch.float64),
                               rtol=0, atol=1e-6)


def test_self_attention_single_position_adds_value():
    block = SpatialSelfAttention(4, 2).double()
    x = torch.randn(2, 4, 1, 1, dtype=torch.float64)
    with torch.no_grad():
        expected = block.value_conv(x) + x
        torch.testing.assert_close(block(x), expected, rtol=0, atol=1e-12)


def test_self_attention_identical_positions_give_uniform_rows():
    block = SpatialSelfAttention(4, 2).double()
    column = torch.randn(1, 4, 1, 1, dtype=torch.float64)
    x = column.expand(1, 4, 3, 3).contiguous()
    with torch.no_grad():
        attention = block.attention_map(x)
        torch.testing.assert_close(attention, torch.full((1, 9, 9), 1.0 / 9, dtype=torch.float64))
        torch.testing.assert_close(block(x), (block.value_conv(column) + column).expand(1, 4, 3, 3))


def test_self_attention_preserves_shape():
    block = SpatialSelfAttention(6, 3)
    for shape in [(1, 6, 1, 1), (2, 6, 4, 7), (3, 6, 8, 8)]:
        assert block(torch.randn(*shape)).shape == shape


def test_self_attention_is_permutation_equivariant():
    block = SpatialSelfAttention(4, 2).double()
    x = torch.randn(1, 4, 3, 4, dtype=torch.float64)
    perm = torch.randperm(12, generator=torch.Generator().manual_seed(0))
    permuted = x.flatten(2)[:, :, perm].reshape(1, 4, 3, 4)
    with torch.no_grad():
        expected = block(x).flatten(2)[:, :, perm]
        actual = block(permuted).flatten(2)
    torch.testing.assert_close(actual, expected)


def test_self_attention_gradcheck():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.normal(size=(1, 4, 4, 4))
        params = _random_params(rng, 4, 2)
        inputs = [t.requires_grad_() for t in _tensors([x] + params)]
        assert torch.autograd.gradcheck(spatial_self_attention, tuple(inputs),
                                        eps=1e-5, atol=1e-8, rtol=1e-4)


def test_self_attention_rejects_wide_embedding():
    with pytest.raises(ShapeError):
        SpatialSelfAttention(4, 5)


def test_self_attention_rejects_channel_mismatch():
    block = SpatialSelfAttention(4, 2)
    with pytest.raises(ShapeError):
        block(torch.randn(1, 3, 2, 2))
