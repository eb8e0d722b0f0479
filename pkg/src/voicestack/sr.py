"""16 kHz -> 48 kHz speech super-resolution.

A deliberately tiny generator: input conv, nearest-neighbor 3x upsampling
of the hidden representation (no transposed convolution, so no tonal
artifacts), a single AMP block, output conv.  Trained adversarially with
MPD + MS-STFTD (six windows) + the Haar sub-band discriminator, plus a
mel L1 at 48 kHz.
"""

from __future__ import annotations

import torch
from torch import nn

from voicestack.audio.io import AudioDomainError, Waveform
from voicestack.audio.spectrogram import SpectrogramTransform
from voicestack.config import SpeechSRConfig
from voicestack.nn import AMPBlock, nn_upsample


class SpeechSR(nn.Module):
    def __init__(self, cfg: SpeechSRConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.channels
        self.rate = cfg.rate
        self.pre = nn.Conv1d(1, c, 7, padding=3)
        self.amp = AMPBlock(c, cfg.amp_kernel, cfg.amp_dilations)
        self.post = nn.Conv1d(c, 1, 7, padding=3)
        for m in self.modules():
            if isinstance(m, nn.Conv1d) and m.bias is not None:
                nn.init.zeros_(m.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """[B, T] at 16 kHz -> [B, 3T] at 48 kHz."""
        h = self.pre(x.unsqueeze(1))
        h = nn_upsample(h, self.rate)
        h = self.amp(h)
        return torch.tanh(self.post(h)).squeeze(1)


def upsample_16to48(model: SpeechSR, wav: Waveform) -> Waveform:
    if wav.sample_rate != 16000:
        raise AudioDomainError(
            f"super-resolution expects 16 kHz input, got {wav.sample_rate}")
    model.eval()
    with torch.no_grad():
        y = model(torch.from_numpy(wav.samples).unsqueeze(0))
    return Waveform(y[0].numpy(), 48000)


def sr_mel_transform(cfg: SpeechSRConfig) -> SpectrogramTransform:
    return SpectrogramTransform(48000, cfg.mel_n_fft, cfg.mel_hop, cfg.mel_bins)
