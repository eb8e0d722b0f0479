"""Discriminators and adversarial objectives.

Three families, each returning per-sub-discriminator logits plus the
per-layer feature maps used for feature matching:

  * MPD: one 2-D conv stack per period in [2, 3, 5, 7, 11], time folded
    into a [T/p x p] grid,
  * MS-STFTD: one 2-D conv stack per STFT window size, consuming stacked
    real+imaginary channels of the complex STFT,
  * DWTD: a 2-level Haar packet analysis into four sub-band signals, one
    1-D conv stack per band (48 kHz super-resolution only).

Objectives are least-squares GAN: real -> 1 / fake -> 0 for the
discriminator, fake -> 1 for the generator, summed over sub-discriminators.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from voicestack.audio.dwt import haar_dwt

MPD_PERIODS = (2, 3, 5, 7, 11)
STFTD_WINDOWS_16K = (2048, 1024, 512, 256, 128)
STFTD_WINDOWS_48K = (4096, 2048, 1024, 512, 256, 128)
DWTD_CHANNELS = (32, 64, 128, 256)


@dataclass
class DiscriminatorOutput:
    logits: list        # one score tensor per sub-discriminator
    features: list      # per sub-discriminator: list of layer features, shallow->deep


class _PeriodDiscriminator(nn.Module):
    def __init__(self, period: int, channels=(32, 128, 256, 512)):
        super().__init__()
        self.period = period
        convs = []
        c_in = 1
        for c_out in channels:
            convs.append(nn.Conv2d(c_in, c_out, (5, 1), (3, 1), padding=(2, 0)))
            c_in = c_out
        self.convs = nn.ModuleList(convs)
        self.post = nn.Conv2d(c_in, 1, (3, 1), padding=(1, 0))

    def forward(self, x):  # [B, 1, T]
        b, _, t = x.shape
        p = self.period
        if t % p:
            x = F.pad(x, (0, p - t % p), mode="reflect")
            t = x.shape[-1]
        x = x.view(b, 1, t // p, p)
        feats = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.1)
            feats.append(x)
        x = self.post(x)
        feats.append(x)
        return x.flatten(1, -1), feats


class MultiPeriodDiscriminator(nn.Module):
    def __init__(self, periods=MPD_PERIODS, channels=(32, 128, 256, 512)):
        super().__init__()
        self.subs = nn.ModuleList(
            [_PeriodDiscriminator(p, channels) for p in periods])

    def forward(self, x) -> DiscriminatorOutput:
        if x.dim() == 2:
            x = x.unsqueeze(1)
        logits, feats = [], []
        for sub in self.subs:
            score, f = sub(x)
            logits.append(score)
            feats.append(f)
        return DiscriminatorOutput(logits, feats)


class _StftDiscriminator(nn.Module):
    def __init__(self, n_fft: int, channels=(32, 64, 128, 128)):
        super().__init__()
        self.n_fft = n_fft
        self.hop = n_fft // 4
        self.register_buffer("window", torch.hann_window(n_fft), persistent=False)
        convs = []
        c_in = 2  # real + imaginary
        for i, c_out in enumerate(channels):
            stride = (2, 1) if i else (1, 1)
            convs.append(nn.Conv2d(c_in, c_out, (7, 5), stride, padding=(3, 2)))
            c_in = c_out
        self.convs = nn.ModuleList(convs)
        self.post = nn.Conv2d(c_in, 1, (3, 3), padding=(1, 1))

    def forward(self, x):  # [B, T]
        if x.shape[-1] < self.n_fft:
            raise ValueError(
                f"input of {x.shape[-1]} samples is shorter than the largest "
                f"STFT window ({self.n_fft})"
            )
        spec = torch.stft(x, self.n_fft, hop_length=self.hop, win_length=self.n_fft,
                          window=self.window, center=True, pad_mode="reflect",
                          return_complex=True)
        h = torch.stack([spec.real, spec.imag], dim=1)  # [B, 2, F, T]
        feats = []
        for conv in self.convs:
            h = F.leaky_relu(conv(h), 0.1)
            feats.append(h)
        h = self.post(h)
        feats.append(h)
        return h.flatten(1, -1), feats


class MultiScaleStftDiscriminator(nn.Module):
    def __init__(self, windows=STFTD_WINDOWS_16K, channels=(32, 64, 128, 128)):
        super().__init__()
        self.subs = nn.ModuleList([_StftDiscriminator(w, channels) for w in windows])

    def forward(self, x) -> DiscriminatorOutput:
        if x.dim() == 3:
            x = x.squeeze(1)
        logits, feats = [], []
        for sub in self.subs:
            score, f = sub(x)
            logits.append(score)
            feats.append(f)
        return DiscriminatorOutput(logits, feats)


class _BandDiscriminator(nn.Module):
    def __init__(self, channels=DWTD_CHANNELS, kernel: int = 15):
        super().__init__()
        convs = []
        c_in = 1
        for c_out in channels:
            convs.append(nn.Conv1d(c_in, c_out, kernel, padding=kernel // 2))
            c_in = c_out
        self.convs = nn.ModuleList(convs)
        self.post = nn.Conv1d(c_in, 1, 3, padding=1)

    def forward(self, x):  # [B, 1, T]
        feats = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.1)
            feats.append(x)
        x = self.post(x)
        feats.append(x)
        return x.flatten(1, -1), feats


class SubBandDiscriminator(nn.Module):
    """Four 1-D discriminators on the 2-level Haar packet bands."""

    def __init__(self, levels: int = 2, channels=DWTD_CHANNELS):
        super().__init__()
        self.levels = levels
        self.subs = nn.ModuleList(
            [_BandDiscriminator(channels) for _ in range(2 ** levels)])

    def forward(self, x) -> DiscriminatorOutput:
        if x.dim() == 2:
            x = x.unsqueeze(1)
        bands = haar_dwt(x, self.levels)
        logits, feats = [], []
        for sub, band in zip(self.subs, bands):
            score, f = sub(band)
            logits.append(score)
            feats.append(f)
        return DiscriminatorOutput(logits, feats)


def lsgan_d_loss(real_out: DiscriminatorOutput, fake_out: DiscriminatorOutput) -> torch.Tensor:
    """Sum over sub-discriminators of E[(D(x)-1)^2] + E[D(G(.))^2]."""
    if len(real_out.logits) != len(fake_out.logits):
        raise ValueError("real/fake sub-discriminator lists differ in length")
    loss = 0.0
    for r, f in zip(real_out.logits, fake_out.logits):
        loss = loss + ((r - 1.0) ** 2).mean() + (f ** 2).mean()
    return loss


def lsgan_g_loss(fake_out: DiscriminatorOutput) -> torch.Tensor:
    """Sum over sub-discriminators of E[(D(G(.)) - 1)^2]."""
    loss = 0.0
    for f in fake_out.logits:
        loss = loss + ((f - 1.0) ** 2).mean()
    return loss


def feature_matching_loss(real_out: DiscriminatorOutput,
                          fake_out: DiscriminatorOutput) -> torch.Tensor:
    """Mean L1 over all corresponding feature maps (real side detached)."""
    if len(real_out.features) != len(fake_out.features):
        raise ValueError("real/fake feature lists differ in length")
    total, count = 0.0, 0
    for rf, ff in zip(real_out.features, fake_out.features):
        if len(rf) != len(ff):
            raise ValueError("feature layer lists differ in length")
        for r, f in zip(rf, ff):
            total = total + (f - r.detach()).abs().mean()
            count += 1
    return total / max(count, 1)
