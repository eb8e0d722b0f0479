"""Text-to-vec: phonemes + prosody prompt -> semantic features + F0.

A VAE over semantic features: the content encoder posterior meets a
per-token text prior through MAS-found alignments and a prosody-
conditioned flow.  Auxiliary heads: deterministic duration predictor
(MSE on log MAS durations), CTC phoneme decoder on the latent, and an
F0 predictor at 4x the feature frame rate built like the synthesizer's
source generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from voicestack.config import TrainConfig, TTVConfig
from voicestack.nn import (
    AdaLNZeroBlock,
    AMPBlock,
    FlowStack,
    StyleEncoder,
    TransformerBlock,
    WaveNet,
    gaussian_kl,
    rsample,
)
from voicestack.ttv.ctc import ctc_loss
from voicestack.ttv.mas import durations_from_alignment, mas_align

F0_VOICED_THRESHOLD = 20.0  # Hz; inference-side voiced decision


@dataclass
class TTVLossReport:
    recon: float = 0.0
    kl: float = 0.0
    duration: float = 0.0
    ctc: float = 0.0
    f0: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


class TextEncoder(nn.Module):
    """Token embedding -> plain transformer blocks -> prosody-conditional
    (AdaLN-Zero) blocks -> per-token Gaussian prior."""

    def __init__(self, cfg: TTVConfig):
        super().__init__()
        self.embed = nn.Embedding(cfg.vocab_size, cfg.text_hidden)
        nn.init.normal_(self.embed.weight, 0.0, cfg.text_hidden ** -0.5)
        self.plain = nn.ModuleList([
            TransformerBlock(cfg.text_hidden, cfg.text_filter, cfg.text_heads,
                             cfg.text_kernel, cfg.text_dropout)
            for _ in range(cfg.text_blocks_plain)
        ])
        self.conditional = nn.ModuleList([
            AdaLNZeroBlock(cfg.text_hidden, cfg.text_filter, cfg.text_heads,
                           cfg.text_kernel, cfg.text_dropout, cfg.style_dim)
            for _ in range(cfg.text_blocks_conditional)
        ])
        self.proj = nn.Conv1d(cfg.text_hidden, 2 * cfg.latent_dim, 1)

    def forward(self, tokens: torch.Tensor, style: torch.Tensor,
                token_mask: torch.Tensor | None = None):
        if tokens.shape[1] == 0:
            raise ValueError("cannot encode empty text")
        pad = None if token_mask is None else ~token_mask.bool()
        h = self.embed(tokens).transpose(1, 2)  # [B, H, N]
        if token_mask is not None:
            h = h * token_mask.unsqueeze(1)
        for block in self.plain:
            h = block(h, key_padding_mask=pad)
        for block in self.conditional:
            h = block(h, style, key_padding_mask=pad)
        if token_mask is not None:
            h = h * token_mask.unsqueeze(1)
        mean, log_var = self.proj(h).chunk(2, dim=1)
        return h, mean, log_var


class DurationPredictor(nn.Module):
    def __init__(self, cfg: TTVConfig):
        super().__init__()
        h = cfg.duration_hidden
        self.style = nn.Conv1d(cfg.style_dim, cfg.text_hidden, 1, bias=False)
        self.conv1 = nn.Conv1d(cfg.text_hidden, h, 3, padding=1)
        self.conv2 = nn.Conv1d(h, h, 3, padding=1)
        self.norm1 = nn.LayerNorm(h)
        self.norm2 = nn.LayerNorm(h)
        self.proj = nn.Conv1d(h, 1, 1)
        self.drop = nn.Dropout(0.5)

    def forward(self, text_hidden: torch.Tensor, style: torch.Tensor):
        """Log-durations per token; the encoder hidden arrives detached."""
        x = text_hidden + self.style(style.unsqueeze(-1))
        x = self.drop(self.norm1(torch.relu(self.conv1(x)).transpose(1, 2)).transpose(1, 2))
        x = self.drop(self.norm2(torch.relu(self.conv2(x)).transpose(1, 2)).transpose(1, 2))
        return self.proj(x).squeeze(1)


class F0Predictor(nn.Module):
    """Source-generator structure: two 2x upsampling stages with AMP blocks."""

    def __init__(self, cfg: TTVConfig):
        super().__init__()
        c = cfg.source_channels
        self.pre = nn.Conv1d(cfg.latent_dim, c, 7, padding=3)
        self.style = nn.Conv1d(cfg.style_dim, c, 1, bias=False)
        ups, amps = [], []
        for rate in cfg.source_rates:
            ups.append(nn.ConvTranspose1d(c, c // 2, 2 * rate, stride=rate,
                                          padding=rate // 2 + rate % 2))
            c //= 2
            amps.append(AMPBlock(c, 3, (1, 3)))
        self.ups = nn.ModuleList(ups)
        self.amps = nn.ModuleList(amps)
        self.head = nn.Conv1d(c, 1, 7, padding=3)

    def forward(self, z: torch.Tensor, style: torch.Tensor):
        x = self.pre(z) + self.style(style.unsqueeze(-1))
        for up, amp in zip(self.ups, self.amps):
            x = amp(up(x))
        return self.head(x).squeeze(1)


class CTCHead(nn.Module):
    """Phoneme decoder over the latent; log-probs fed to the CTC objective."""

    def __init__(self, cfg: TTVConfig):
        super().__init__()
        h = cfg.ctc_hidden
        self.net = nn.Sequential(
            nn.Conv1d(cfg.latent_dim, h, 5, padding=2), nn.GELU(),
            nn.Conv1d(h, h, 5, padding=2), nn.GELU(),
            nn.Conv1d(h, cfg.vocab_size, 1),
        )

    def forward(self, z: torch.Tensor):
        return torch.log_softmax(self.net(z).transpose(1, 2), dim=-1)  # [B, T, V]


def regulate(stats: torch.Tensor, durations: torch.Tensor) -> torch.Tensor:
    """Expand per-token columns by integer durations: [C, N] -> [C, sum(d)]."""
    return torch.repeat_interleave(stats, durations, dim=-1)


class TextToVec(nn.Module):
    def __init__(self, cfg: TTVConfig):
        super().__init__()
        self.cfg = cfg
        self.style_encoder = StyleEncoder(80, cfg.style_hidden, cfg.style_dim)
        self.text_encoder = TextEncoder(cfg)
        self.content_pre = nn.Conv1d(cfg.semantic_dim, cfg.content_enc_hidden, 5,
                                     padding=2)
        self.content_enc = WaveNet(cfg.content_enc_hidden, cfg.content_enc_layers,
                                   cfg.wn_kernel)
        self.posterior_proj = nn.Conv1d(cfg.content_enc_hidden, 2 * cfg.latent_dim, 1)
        self.flow = FlowStack(cfg.latent_dim, cfg.flow_hidden, cfg.flow_filter,
                              cfg.flow_heads, cfg.flow_kernel, cfg.flow_dropout,
                              cfg.style_dim, cfg.flow_layers, cfg.flow_blocks)
        self.duration = DurationPredictor(cfg)
        self.ctc_head = CTCHead(cfg)
        self.f0_predictor = F0Predictor(cfg)
        self.dec_pre = nn.Conv1d(cfg.latent_dim, cfg.content_dec_hidden, 5, padding=2)
        self.decoder = WaveNet(cfg.content_dec_hidden, cfg.content_dec_layers,
                               cfg.wn_kernel, cond_dim=cfg.style_dim)
        self.dec_proj = nn.Conv1d(cfg.content_dec_hidden, cfg.semantic_dim, 1)

    def encode_style(self, mel: torch.Tensor) -> torch.Tensor:
        return self.style_encoder(mel)

    def posterior(self, semantic: torch.Tensor, frame_mask=None,
                  eps: torch.Tensor | None = None):
        h = self.content_enc(self.content_pre(semantic))
        if frame_mask is not None:
            h = h * frame_mask
        mean, log_var = self.posterior_proj(h).chunk(2, dim=1)
        return rsample(mean, log_var, eps)

    def decode(self, z: torch.Tensor, style: torch.Tensor):
        h = self.decoder(self.dec_pre(z), cond=style.unsqueeze(-1))
        return self.dec_proj(h)

    def align(self, z_prior_side: torch.Tensor, text_mean: torch.Tensor,
              text_log_var: torch.Tensor, n_tokens: int, n_frames: int):
        """MAS on one sample; all inputs detached, numpy DP inside."""
        z = z_prior_side[:, :n_frames].detach()
        mu = text_mean[:, :n_tokens].detach()
        lv = text_log_var[:, :n_tokens].detach()
        inv_var = torch.exp(-lv)  # [C, N]
        const = -0.5 * (math.log(2 * math.pi) + lv).sum(dim=0)  # [N]
        quad = -0.5 * torch.einsum("ct,cn->nt", z ** 2, inv_var)
        lin = torch.einsum("ct,cn->nt", z, mu * inv_var)
        sq = -0.5 * (mu ** 2 * inv_var).sum(dim=0)  # [N]
        log_lik = (quad + lin + const.unsqueeze(1) + sq.unsqueeze(1)).cpu().numpy()
        return mas_align(log_lik)

    def training_forward(self, batch: dict, train_cfg: TrainConfig,
                         eps: torch.Tensor | None = None):
        """batch: tokens [B,N] (+blank-interleaved), token_mask, semantic
        [B,D,T], frame_mask [B,T], f0 [B,4T], voiced, mel [B,80,Tm],
        ctc_targets [B,L], ctc_lengths [B]."""
        tokens, token_mask = batch["tokens"], batch["token_mask"]
        semantic, frame_mask = batch["semantic"], batch["frame_mask"]
        fmask = frame_mask.unsqueeze(1)

        style = self.encode_style(batch["mel"])
        text_hidden, t_mean, t_logvar = self.text_encoder(tokens, style, token_mask)
        post = self.posterior(semantic, fmask, eps=eps)
        z_p = self.flow.transport(post.sample, style, "forward", fmask)

        # per-sample alignment and duration targets
        b = tokens.shape[0]
        exp_mean = torch.zeros_like(post.mean)
        exp_logvar = torch.zeros_like(post.log_var)
        log_dur_target = torch.zeros_like(token_mask, dtype=torch.float32)
        for i in range(b):
            n = int(token_mask[i].sum())
            t = int(frame_mask[i].sum())
            path = self.align(z_p[i], t_mean[i], t_logvar[i], n, t)
            dur = torch.from_numpy(durations_from_alignment(path)).to(tokens.device)
            log_dur_target[i, :n] = torch.log(dur.float())
            exp_mean[i, :, :t] = regulate(t_mean[i, :, :n], dur)
            exp_logvar[i, :, :t] = regulate(t_logvar[i, :, :n], dur)

        # KL in posterior space: expanded prior mean crosses the reverse flow
        prior_mean_t = self.flow.transport(exp_mean, style, "reverse", fmask)
        kl = gaussian_kl(post.mean, post.log_var, prior_mean_t, exp_logvar, fmask)

        log_dur_pred = self.duration(text_hidden.detach(), style)
        dur_loss = (((log_dur_pred - log_dur_target) ** 2) * token_mask).sum() \
            / token_mask.sum()

        log_probs = self.ctc_head(post.sample)
        frame_lengths = frame_mask.sum(dim=1).long()
        ctc = ctc_loss(log_probs, batch["ctc_targets"], frame_lengths,
                       batch["ctc_lengths"])

        f0_pred = self.f0_predictor(post.sample, style)
        f0, voiced = batch["f0"], batch["voiced"]
        t4 = min(f0_pred.shape[-1], f0.shape[-1])
        m4 = torch.repeat_interleave(frame_mask, 4, dim=1)[:, :t4]
        f0_loss = ((f0[:, :t4] * voiced[:, :t4] - f0_pred[:, :t4]).abs() * m4).sum() \
            / m4.sum()

        sem_hat = self.decode(post.sample, style)
        recon = ((sem_hat - semantic).abs() * fmask).sum() / (fmask.sum() * semantic.shape[1])

        total = (train_cfg.weight_recon * recon
                 + train_cfg.weight_kl * kl
                 + train_cfg.weight_dur * dur_loss
                 + train_cfg.weight_ctc * ctc
                 + train_cfg.weight_f0 * f0_loss)
        report = TTVLossReport(
            recon=float(recon.detach()), kl=float(kl.detach()),
            duration=float(dur_loss.detach()), ctc=float(ctc.detach()),
            f0=float(f0_loss.detach()), total=float(total.detach()),
        )
        return total, report

    @torch.no_grad()
    def infer(self, tokens: torch.Tensor, prosody_mel: torch.Tensor,
              t_ttv: float = 0.333, duration_scale: float = 1.0,
              eps: torch.Tensor | None = None):
        """tokens: [1, N] blank-interleaved ids.  Returns (semantic [1,D,T],
        f0 [1,4T] in Hz with unvoiced as 0)."""
        if t_ttv <= 0:
            raise ValueError("t_ttv must be > 0")
        if duration_scale <= 0:
            raise ValueError("duration_scale must be > 0")
        style = self.encode_style(prosody_mel)
        text_hidden, t_mean, t_logvar = self.text_encoder(tokens, style)
        log_dur = self.duration(text_hidden, style)
        dur = torch.ceil(torch.exp(log_dur) * duration_scale).long().clamp(min=1)
        if int(dur.sum()) < 1:
            raise ValueError("predicted zero total duration")
        mean = regulate(t_mean[0], dur[0]).unsqueeze(0)
        log_var = regulate(t_logvar[0], dur[0]).unsqueeze(0)
        z_p = rsample(mean, log_var, eps, temperature=t_ttv).sample
        z = self.flow.inverse(z_p, style)
        semantic = self.decode(z, style)
        f0 = torch.clamp(self.f0_predictor(z, style), min=0.0)
        f0 = torch.where(f0 >= F0_VOICED_THRESHOLD, f0, torch.zeros_like(f0))
        return semantic, f0
