"""Global style encoder: mel prompt of any length -> fixed-size vector."""

from __future__ import annotations

import torch
from torch import nn


class StyleEncoder(nn.Module):
    """Two per-frame linear (spectral) encoders, two 1-D conv (temporal)
    encoders, multi-head self-attention, then a temporal average."""

    MIN_FRAMES = 4

    def __init__(self, n_mels: int = 80, hidden: int = 128, style_dim: int = 256,
                 heads: int = 2):
        super().__init__()
        self.spectral = nn.Sequential(
            nn.Linear(n_mels, hidden), nn.GELU(),
            nn.Linear(hidden, hidden), nn.GELU(),
        )
        self.temporal1 = nn.Conv1d(hidden, hidden, 5, padding=2)
        self.temporal2 = nn.Conv1d(hidden, hidden, 5, padding=2)
        self.attn = nn.MultiheadAttention(hidden, heads, batch_first=True)
        self.proj = nn.Linear(hidden, style_dim)

    def forward(self, mel: torch.Tensor) -> torch.Tensor:
        """mel: [B, n_mels, T] log-mel -> [B, style_dim]."""
        if mel.shape[-1] < self.MIN_FRAMES:
            raise ValueError(
                f"style prompt of {mel.shape[-1]} frames is shorter than "
                f"{self.MIN_FRAMES}; replicate the prompt first"
            )
        h = self.spectral(mel.transpose(1, 2)).transpose(1, 2)  # [B, H, T]
        h = h + torch.nn.functional.gelu(self.temporal1(h))
        h = h + torch.nn.functional.gelu(self.temporal2(h))
        h = h.transpose(1, 2)  # [B, T, H]
        a, _ = self.attn(h, h, h, need_weights=False)
        return self.proj((h + a).mean(dim=1))
