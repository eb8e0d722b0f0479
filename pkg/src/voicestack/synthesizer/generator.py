"""Hierarchical adaptive generator: source generator (acoustic latent ->
pitch representation at the F0 rate, with an auxiliary F0 head) and
waveform generator (latent + pitch representation + style -> audio)."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from voicestack.config import SynthesizerConfig
from voicestack.nn import AMPBlock


class UpConv(nn.Module):
    """Transposed conv sized so length T -> rate * T exactly."""

    def __init__(self, c_in: int, c_out: int, rate: int):
        super().__init__()
        kernel = 2 * rate
        padding = (kernel - rate + 1) // 2
        out_pad = 1 if rate % 2 else 0
        self.conv = nn.ConvTranspose1d(c_in, c_out, kernel, stride=rate,
                                       padding=padding, output_padding=out_pad)

    def forward(self, x):
        return self.conv(x)


class _MultiKernelAMP(nn.Module):
    """Parallel AMP blocks with different kernel sizes, averaged."""

    def __init__(self, channels: int, kernels, dilations):
        super().__init__()
        self.blocks = nn.ModuleList(
            [AMPBlock(channels, k, dilations) for k in kernels])

    def forward(self, x):
        out = self.blocks[0](x)
        for block in self.blocks[1:]:
            out = out + block(x)
        return out / len(self.blocks)


class SourceGenerator(nn.Module):
    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        c = cfg.source_channels
        self.pre = nn.Conv1d(cfg.latent_dim, c, 7, padding=3)
        self.style = nn.Conv1d(cfg.style_dim, c, 1, bias=False)
        ups, amps = [], []
        for rate in cfg.source_rates:
            ups.append(UpConv(c, c // 2, rate))
            c //= 2
            amps.append(_MultiKernelAMP(c, cfg.amp_kernels, cfg.amp_dilations))
        self.ups = nn.ModuleList(ups)
        self.amps = nn.ModuleList(amps)
        self.pitch_repr = nn.Conv1d(c, cfg.p_h_dim, 7, padding=3)
        self.f0_head = nn.Conv1d(c, 1, 7, padding=3)

    def forward(self, z_a: torch.Tensor, style: torch.Tensor):
        """Returns (p_h [B, p_h_dim, 4T], f0_pred [B, 4T])."""
        x = self.pre(z_a) + self.style(style.unsqueeze(-1))
        for up, amp in zip(self.ups, self.amps):
            x = amp(up(x))
        return self.pitch_repr(x), self.f0_head(x).squeeze(1)


class WaveformGenerator(nn.Module):
    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        c = cfg.waveform_channels
        self.pre = nn.Conv1d(cfg.latent_dim, c, 7, padding=3)
        self.style = nn.Conv1d(cfg.style_dim, c, 1, bias=False)
        self.rates = cfg.waveform_rates
        ups, amps = [], []
        for rate in self.rates:
            ups.append(UpConv(c, c // 2, rate))
            c //= 2
            amps.append(_MultiKernelAMP(c, cfg.amp_kernels, cfg.amp_dilations))
        self.ups = nn.ModuleList(ups)
        self.amps = nn.ModuleList(amps)
        # pitch representation enters at the resolution it was generated at
        # (after the first upsampling stage: 50 Hz * rates[0] * ph_rate == F0 rate)
        self.pitch_proj = nn.Conv1d(cfg.p_h_dim, cfg.waveform_channels // 2, 1)
        self.post = nn.Conv1d(c, 1, 7, padding=3)

    def forward(self, z_a: torch.Tensor, p_h: torch.Tensor, style: torch.Tensor):
        """Returns waveform [B, prod(rates) * T]."""
        x = self.pre(z_a) + self.style(style.unsqueeze(-1))
        for i, (up, amp) in enumerate(zip(self.ups, self.amps)):
            x = up(x)
            if i == 0:
                ph = F.interpolate(p_h, size=x.shape[-1], mode="nearest")
                x = x + self.pitch_proj(ph)
            x = amp(x)
        return torch.tanh(self.post(x)).squeeze(1)
