"""Snake activation and its anti-aliased (2x oversampled) wrapper."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

FILTER_TAPS_PER_PHASE = 6  # 12-tap kernel at the 2x rate
KAISER_BETA = 8.0


def snake(x: torch.Tensor, alpha: torch.Tensor) -> torch.Tensor:
    """y = x + sin^2(alpha * x) / alpha, alpha > 0 (per channel)."""
    alpha = torch.as_tensor(alpha, dtype=x.dtype, device=x.device)
    if torch.any(alpha <= 0):
        raise ValueError("snake alpha must be positive")
    if alpha.dim() == 1:  # [C] -> broadcast over [B, C, T]
        alpha = alpha.view(1, -1, 1)
    return x + torch.sin(alpha * x) ** 2 / alpha


class Snake(torch.nn.Module):
    """Per-channel trainable alpha, kept positive via exp."""

    def __init__(self, channels: int):
        super().__init__()
        self.log_alpha = torch.nn.Parameter(torch.zeros(channels))

    def forward(self, x):
        return snake(x, torch.exp(self.log_alpha).view(1, -1, 1))


def _lowpass_kernel(taps: int = 2 * FILTER_TAPS_PER_PHASE, cutoff: float = 0.25,
                    beta: float = KAISER_BETA) -> torch.Tensor:
    """Kaiser-windowed sinc low-pass (cutoff as fraction of the 2x rate)."""
    n = np.arange(taps) - (taps - 1) / 2
    kern = 2 * cutoff * np.sinc(2 * cutoff * n) * np.kaiser(taps, beta)
    kern = kern / kern.sum()
    return torch.from_numpy(kern.astype(np.float32))


def _depthwise(x: torch.Tensor, kernel: torch.Tensor, stride: int = 1,
               padding: int = 0) -> torch.Tensor:
    c = x.shape[1]
    weight = kernel.to(x.dtype).view(1, 1, -1).expand(c, 1, -1)
    return F.conv1d(x, weight, stride=stride, padding=padding, groups=c)


def upsample2x_lowpass(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """Zero-stuff to 2x then low-pass; output is exactly 2x the input length."""
    b, c, t = x.shape
    stuffed = torch.zeros(b, c, 2 * t, dtype=x.dtype, device=x.device)
    stuffed[..., ::2] = x
    taps = kernel.shape[-1]
    out = _depthwise(stuffed, 2.0 * kernel, padding=taps // 2)
    return out[..., : 2 * t]


def downsample2x_lowpass(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """Low-pass then take every second sample."""
    taps = kernel.shape[-1]
    out = _depthwise(x, kernel, stride=2, padding=taps // 2)
    return out[..., : x.shape[-1] // 2]


class AntiAliasedSnake(torch.nn.Module):
    """Snake evaluated at a 2x internal rate with low-pass filtering on both
    sides, so harmonics the nonlinearity creates above the original Nyquist
    are representable and then removed instead of folding back."""

    def __init__(self, channels: int):
        super().__init__()
        self.act = Snake(channels)
        self.register_buffer("kernel", _lowpass_kernel(), persistent=False)

    def forward(self, x):
        up = upsample2x_lowpass(x, self.kernel)
        return downsample2x_lowpass(self.act(up), self.kernel)
