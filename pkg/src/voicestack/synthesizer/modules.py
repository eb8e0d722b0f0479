"""Encoder-side modules of the hierarchical synthesizer."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from voicestack.config import SynthesizerConfig
from voicestack.nn import AMPBlock, GaussianLatent, WaveNet, rsample

LINEAR_BINS = 641  # n_fft 1280 -> 641 magnitude bins


class DownConv(nn.Module):
    """Strided conv with asymmetric same-ish padding: length T -> T // stride."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int):
        super().__init__()
        self.pad = (kernel - stride + 1) // 2, (kernel - stride) // 2
        self.conv = nn.Conv1d(c_in, c_out, kernel, stride=stride)

    def forward(self, x):
        return self.conv(F.pad(x, self.pad))


def pool_f0(f0_hz: torch.Tensor, voiced: torch.Tensor, ratio: int = 4) -> torch.Tensor:
    """log(max(F0, 1)) * voiced at 200 Hz, average-pooled to the 50 Hz grid."""
    log_f0 = torch.log(torch.clamp(f0_hz, min=1.0)) * voiced
    t = (log_f0.shape[-1] // ratio) * ratio
    return F.avg_pool1d(log_f0[..., :t].unsqueeze(1), ratio, ratio)


def _trim(*tensors):
    t = min(x.shape[-1] for x in tensors)
    return [x[..., :t] for x in tensors]


class DualAudioEncoder(nn.Module):
    """Posterior over the acoustic latent from raw waveform + linear spectrogram.

    The waveform branch downsamples by the product of the encoder rates
    (== the spectrogram hop), so both branches land on the same 50 Hz grid
    and concatenate channel-wise before the projection to mean/log-var.
    """

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        ch = cfg.wav_enc_channels
        self.wav_pre = nn.Conv1d(1, ch[0], 7, padding=3)
        self.wav_stages = nn.ModuleList()
        for i, (rate, kernel) in enumerate(zip(cfg.wav_enc_rates, cfg.wav_enc_kernels)):
            # downsample first so the AMP block runs at the reduced rate
            self.wav_stages.append(nn.ModuleList([
                DownConv(ch[i], ch[i + 1], kernel, rate),
                AMPBlock(ch[i + 1], 3, cfg.amp_dilations),
            ]))
        self.spec_pre = nn.Conv1d(LINEAR_BINS, cfg.hidden, 1)
        self.spec_wn = WaveNet(cfg.hidden, cfg.spec_enc_layers, cfg.wn_kernel)
        self.proj = nn.Conv1d(ch[-1] + cfg.hidden, 2 * cfg.latent_dim, 1)

    def forward(self, wav: torch.Tensor, linspec: torch.Tensor,
                eps: torch.Tensor | None = None) -> GaussianLatent:
        h_wav = self.wav_pre(wav.unsqueeze(1))
        for down, amp in self.wav_stages:
            h_wav = amp(down(h_wav))
        h_spec = self.spec_wn(self.spec_pre(linspec))
        if abs(h_wav.shape[-1] - h_spec.shape[-1]) > 1:
            raise ValueError(
                f"waveform/spectrogram frame mismatch: {h_wav.shape[-1]} vs "
                f"{h_spec.shape[-1]}"
            )
        h_wav, h_spec = _trim(h_wav, h_spec)
        mean, log_var = self.proj(torch.cat([h_wav, h_spec], dim=1)).chunk(2, dim=1)
        return rsample(mean, log_var, eps)


class SourceFilterEncoder(nn.Module):
    """Multi-path semantic encoder.

    Prior path (condition c): filter encoder on the *perturbed* semantic
    features plus source encoder on pooled log-F0.  Posterior path: the
    adaptive encoder on unperturbed features (the restorer) plus the same
    source branch, with its own parameters and projection.
    """

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        h = cfg.hidden
        self.source_pre = nn.Conv1d(1, h, 7, padding=3)
        self.source_wn = WaveNet(h, cfg.sf_layers, cfg.wn_kernel)
        self.filter_pre = nn.Conv1d(cfg.semantic_dim, h, 7, padding=3)
        self.filter_wn = WaveNet(h, cfg.sf_layers, cfg.wn_kernel)
        self.adaptive_pre = nn.Conv1d(cfg.semantic_dim, h, 7, padding=3)
        self.adaptive_wn = WaveNet(h, cfg.sf_layers, cfg.wn_kernel)
        self.prior_proj = nn.Conv1d(2 * h, 2 * cfg.latent_dim, 1)
        self.posterior_proj = nn.Conv1d(2 * h, 2 * cfg.latent_dim, 1)

    def _source(self, f0_hz, voiced):
        return self.source_wn(self.source_pre(pool_f0(f0_hz, voiced)))

    def prior(self, semantic: torch.Tensor, f0_hz: torch.Tensor,
              voiced: torch.Tensor):
        """Gaussian prior over the semantic latent given condition c."""
        h_src = self._source(f0_hz, voiced)
        h_filt = self.filter_wn(self.filter_pre(semantic))
        h_src, h_filt = _trim(h_src, h_filt)
        return self.prior_proj(torch.cat([h_filt, h_src], dim=1)).chunk(2, dim=1)

    def forward(self, semantic: torch.Tensor, semantic_pert: torch.Tensor,
                f0_hz: torch.Tensor, voiced: torch.Tensor,
                eps: torch.Tensor | None = None):
        h_src = self._source(f0_hz, voiced)
        h_filt = self.filter_wn(self.filter_pre(semantic_pert))
        h_adapt = self.adaptive_wn(self.adaptive_pre(semantic))
        h_src, h_filt, h_adapt = _trim(h_src, h_filt, h_adapt)
        prior = self.prior_proj(torch.cat([h_filt, h_src], dim=1)).chunk(2, dim=1)
        mean, log_var = self.posterior_proj(
            torch.cat([h_adapt, h_src], dim=1)).chunk(2, dim=1)
        posterior = rsample(mean, log_var, eps)
        return prior, posterior, h_adapt


class AcousticPrior(nn.Module):
    """p(z_a | z_sr): maps the semantic latent to acoustic Gaussian params."""

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        self.pre = nn.Conv1d(cfg.latent_dim, cfg.hidden, 5, padding=2)
        self.wn = WaveNet(cfg.hidden, cfg.sf_layers, cfg.wn_kernel)
        self.proj = nn.Conv1d(cfg.hidden, 2 * cfg.latent_dim, 1)

    def forward(self, z_sr: torch.Tensor):
        return self.proj(self.wn(self.pre(z_sr))).chunk(2, dim=1)


class ProsodyDecoder(nn.Module):
    """Reconstructs the low mel bins (prosody band) from the semantic latent,
    conditioned on the voice style."""

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        self.pre = nn.Conv1d(cfg.latent_dim, cfg.hidden, 5, padding=2)
        self.wn = WaveNet(cfg.hidden, cfg.prosody_layers, cfg.wn_kernel,
                          cond_dim=cfg.style_dim)
        self.proj = nn.Conv1d(cfg.hidden, cfg.prosody_bins, 1)

    def forward(self, z_sr: torch.Tensor, style: torch.Tensor):
        h = self.wn(self.pre(z_sr), cond=style.unsqueeze(-1))
        return self.proj(h)
