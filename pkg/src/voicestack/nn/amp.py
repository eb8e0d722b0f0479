"""AMP residual block (dilated convs around anti-aliased Snake) and the
nearest-neighbor upsampler."""

from __future__ import annotations

import torch
from torch import nn

from voicestack.nn.activations import AntiAliasedSnake


def nn_upsample(x: torch.Tensor, r: int) -> torch.Tensor:
    """Repeat every time step r times along the last axis."""
    if r < 1:
        raise ValueError(f"upsample factor must be >= 1, got {r}")
    if r == 1:
        return x
    return torch.repeat_interleave(x, r, dim=-1)


class AMPBlock(nn.Module):
    """Time-preserving residual block: per dilation, two anti-aliased Snake
    activations wrapped around a dilated and a plain convolution."""

    def __init__(self, channels: int, kernel: int = 3, dilations=(1, 3, 5),
                 style_dim: int | None = None):
        super().__init__()
        self.convs1 = nn.ModuleList([
            nn.Conv1d(channels, channels, kernel, dilation=d,
                      padding=(kernel - 1) * d // 2)
            for d in dilations
        ])
        self.convs2 = nn.ModuleList([
            nn.Conv1d(channels, channels, kernel, padding=(kernel - 1) // 2)
            for _ in dilations
        ])
        self.acts1 = nn.ModuleList([AntiAliasedSnake(channels) for _ in dilations])
        self.acts2 = nn.ModuleList([AntiAliasedSnake(channels) for _ in dilations])
        self.cond = (nn.Conv1d(style_dim, channels, 1, bias=False)
                     if style_dim else None)

    def forward(self, x, style=None):
        if self.cond is not None and style is not None:
            x = x + self.cond(style.unsqueeze(-1))
        for c1, c2, a1, a2 in zip(self.convs1, self.convs2, self.acts1, self.acts2):
            xt = a1(x)
            xt = c1(xt)
            xt = a2(xt)
            xt = c2(xt)
            x = x + xt
        return x
