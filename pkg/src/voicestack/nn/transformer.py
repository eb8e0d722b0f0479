"""Transformer blocks with convolutional feed-forward.

No positional embedding anywhere: training slices audio randomly, so the
blocks stay translation-agnostic and rely on the conv feed-forward for
local order.  The conditional variant regresses LayerNorm shift/scale and
per-branch output gates from a style vector, gates zero-initialized, so a
fresh block is the identity map and conditioning grows in smoothly.
"""

from __future__ import annotations

import torch
from torch import nn


class _ConvFF(nn.Module):
    def __init__(self, hidden: int, filter_size: int, kernel: int, dropout: float):
        super().__init__()
        self.conv1 = nn.Conv1d(hidden, filter_size, kernel, padding=(kernel - 1) // 2)
        self.conv2 = nn.Conv1d(filter_size, hidden, kernel, padding=(kernel - 1) // 2)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):  # [B, C, T]
        return self.conv2(self.drop(torch.nn.functional.gelu(self.conv1(x))))


class TransformerBlock(nn.Module):
    """Plain pre-LN self-attention block operating on [B, C, T]."""

    def __init__(self, hidden: int, filter_size: int, heads: int, kernel: int,
                 dropout: float = 0.0):
        super().__init__()
        self.ln1 = nn.LayerNorm(hidden)
        self.attn = nn.MultiheadAttention(hidden, heads, dropout=dropout,
                                          batch_first=True)
        self.ln2 = nn.LayerNorm(hidden)
        self.ff = _ConvFF(hidden, filter_size, kernel, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, key_padding_mask=None):
        h = x.transpose(1, 2)  # [B, T, C]
        m = self.ln1(h)
        a, _ = self.attn(m, m, m, key_padding_mask=key_padding_mask,
                         need_weights=False)
        h = h + self.drop(a)
        f = self.ff(self.ln2(h).transpose(1, 2)).transpose(1, 2)
        h = h + self.drop(f)
        return h.transpose(1, 2)


class AdaLNZeroBlock(nn.Module):
    """Style-conditioned block; exact identity at initialization."""

    def __init__(self, hidden: int, filter_size: int, heads: int, kernel: int,
                 dropout: float, style_dim: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(hidden, elementwise_affine=False)
        self.attn = nn.MultiheadAttention(hidden, heads, dropout=dropout,
                                          batch_first=True)
        self.ln2 = nn.LayerNorm(hidden, elementwise_affine=False)
        self.ff = _ConvFF(hidden, filter_size, kernel, dropout)
        self.drop = nn.Dropout(dropout)
        self.modulation = nn.Linear(style_dim, 6 * hidden)
        nn.init.zeros_(self.modulation.weight)
        nn.init.zeros_(self.modulation.bias)

    def forward(self, x, style, key_padding_mask=None):
        # x: [B, C, T], style: [B, style_dim]
        sh1, sc1, g1, sh2, sc2, g2 = self.modulation(style).unsqueeze(1).chunk(6, dim=-1)
        h = x.transpose(1, 2)
        m = self.ln1(h) * (1 + sc1) + sh1
        a, _ = self.attn(m, m, m, key_padding_mask=key_padding_mask,
                         need_weights=False)
        h = h + g1 * self.drop(a)
        m = self.ln2(h) * (1 + sc2) + sh2
        f = self.ff(m.transpose(1, 2)).transpose(1, 2)
        h = h + g2 * self.drop(f)
        return h.transpose(1, 2)
