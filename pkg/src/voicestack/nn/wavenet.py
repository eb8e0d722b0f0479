"""Non-causal WaveNet stack with gated-tanh units and skip connections."""

from __future__ import annotations

import torch
from torch import nn


class WaveNet(nn.Module):
    """Shape-preserving dilated conv stack.

    ``cond`` may be local ([B, cond_dim, T]) or global ([B, cond_dim, 1]);
    it is projected per layer and added before the gate.
    """

    def __init__(self, hidden: int, layers: int, kernel: int = 5,
                 dilation_growth: int = 1, cond_dim: int = 0, dropout: float = 0.0):
        super().__init__()
        self.hidden = hidden
        self.layers = layers
        self.in_layers = nn.ModuleList()
        self.res_skip = nn.ModuleList()
        self.drop = nn.Dropout(dropout)
        for i in range(layers):
            d = dilation_growth ** i
            pad = (kernel - 1) * d // 2
            self.in_layers.append(nn.Conv1d(hidden, 2 * hidden, kernel,
                                            dilation=d, padding=pad))
            out = 2 * hidden if i < layers - 1 else hidden
            self.res_skip.append(nn.Conv1d(hidden, out, 1))
        self.cond_layer = (nn.Conv1d(cond_dim, 2 * hidden * layers, 1)
                           if cond_dim else None)

    def receptive_field(self, kernel: int = 5, dilation_growth: int = 1) -> int:
        return 1 + sum((kernel - 1) * dilation_growth ** i for i in range(self.layers))

    def forward(self, x, cond=None):
        if cond is not None:
            if self.cond_layer is None:
                raise ValueError("stack was built without conditioning")
            if cond.shape[-1] not in (1, x.shape[-1]):
                raise ValueError(
                    f"condition length {cond.shape[-1]} does not match input {x.shape[-1]}"
                )
            g = self.cond_layer(cond)
        out = torch.zeros_like(x)
        for i, (conv, rs) in enumerate(zip(self.in_layers, self.res_skip)):
            h = conv(x)
            if cond is not None:
                h = h + g[:, 2 * self.hidden * i: 2 * self.hidden * (i + 1)]
            a, b = h.chunk(2, dim=1)
            acts = self.drop(torch.tanh(a) * torch.sigmoid(b))
            h = rs(acts)
            if i < self.layers - 1:
                res, skip = h.chunk(2, dim=1)
                x = x + res
                out = out + skip
            else:
                out = out + h
        return out
