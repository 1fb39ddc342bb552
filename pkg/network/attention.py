"""
Attention blocks of the joint network.

spatial_self_attention: non-local block. B, C (N×C') and D (N×C) come from 1×1
convolutions, S = B·Cᵀ is softmaxed row-wise, and softmax(S)·D is added back to the
input. No output projection.

classification_gated_attention: A' = A + α·s·A, with s the image-level fire probability
and α a learned scalar that starts at zero.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from utils.error_handlers import ShapeError


def spatial_self_attention(x: torch.Tensor, query_weight: torch.Tensor, query_bias: torch.Tensor,
                           key_weight: torch.Tensor, key_bias: torch.Tensor,
                           value_weight: torch.Tensor, value_bias: torch.Tensor,
                           return_attention: bool = False):
    """
    Args:
        x: (batch, C, h, w)
        query_weight/key_weight: (C', C, 1, 1); value_weight: (C, C, 1, 1)

    Returns:
        (batch, C, h, w) output, plus the (batch, N, N) attention when requested
    """
    if x.dim() != 4:
        raise ShapeError(f"spatial self-attention expects (batch, C, h, w), got {tuple(x.shape)}")
    batch, channels, height, width = x.shape
    if query_weight.shape[1] != channels or key_weight.shape[1] != channels:
        raise ShapeError("embedding convolutions do not match the input channels",
                         channels, (query_weight.shape[1], key_weight.shape[1]))
    if query_weight.shape[0] != key_weight.shape[0]:
        raise ShapeError("B and C embeddings must share a width",
                         query_weight.shape[0], key_weight.shape[0])
    if tuple(value_weight.shape[:2]) != (channels, channels):
        raise ShapeError("D must map C channels to C channels", (channels, channels),
                         tuple(value_weight.shape[:2]))

    query = F.conv2d(x, query_weight, query_bias).flatten(2).transpose(1, 2)  # batch × N × C'
    key = F.conv2d(x, key_weight, key_bias).flatten(2)                          # batch × C' × N
    value = F.conv2d(x, value_weight, value_bias).flatten(2).transpose(1, 2)  # batch × N × C

    similarity = torch.bmm(query, key)
    attention = torch.softmax(similarity, dim=-1)
    out = torch.bmm(attention, value).transpose(1, 2).reshape(batch, channels, height, width)
    out = out + x

    if return_attention:
        return out, attention
    return out


class SpatialSelfAttention(nn.Module):
    def __init__(self, channels: int, embed_channels: int):
        super().__init__()
        if not 1 <= embed_channels <= channels:
            raise ShapeError(f"embed_channels must be in [1, {channels}], got {embed_channels}")
        self.channels = channels
        self.embed_channels = embed_channels
        self.query_conv = nn.Conv2d(channels, embed_channels, kernel_size=1)
        self.key_conv = nn.Conv2d(channels, embed_channels, kernel_size=1)
        self.value_conv = nn.Conv2d(channels, channels, kernel_size=1)

    def _params(self):
        return (self.query_conv.weight, self.query_conv.bias,
                self.key_conv.weight, self.key_conv.bias,
                self.value_conv.weight, self.value_conv.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return spatial_self_attention(x, *self._params())

    def attention_map(self, x: torch.Tensor) -> torch.Tensor:
        """Row-softmaxed (batch, N, N) similarity matrix"""
        _, attention = spatial_self_attention(x, *self._params(), return_attention=True)
        return attention


def classification_gated_attention(A, s, alpha):
    """
    A' = A + α·s·A.

    A is a (batch, 1, H, W) tensor (or any array), s a per-image probability in [0, 1]
    (scalar or shape (batch,)), alpha a scalar.
    """
    if isinstance(s, torch.Tensor) and s.dim() == 1 and isinstance(A, torch.Tensor):
        if s.shape[0] != A.shape[0]:
            raise ShapeError("one classification probability per image expected",
                             A.shape[0], s.shape[0])
        s = s.view(-1, *([1] * (A.dim() - 1)))
    return A + alpha * s * A


class ClassificationGate(nn.Module):
    """Owns α, initialized to exactly zero"""

    def __init__(self):
        super().__init__()
        self.alpha = nn.Parameter(torch.zeros(()))

    def forward(self, A: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
        return classification_gated_attention(A, s, self.alpha)
