"""The hierarchical speech synthesizer.

Training couples two levels of latent variables: a semantic latent with
prior p(z_sr | c) (perturbed features + log-F0) and posterior
q(z_sr | features, F0), and an acoustic latent with prior p(z_a | z_sr)
and posterior q(z_a | waveform, spectrogram).  Volume-preserving flows
bridge each prior/posterior pair; KL terms are closed-form Gaussian KLs
with the prior mean transported through the reverse flow (and, for the
bidirectional regularizer, the posterior mean transported forward).
Audio is decoded by the source generator (pitch representation + F0
head) and the waveform generator.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import torch
from torch import nn

from voicestack.audio.spectrogram import SpectrogramTransform
from voicestack.config import SynthesizerConfig, TrainConfig
from voicestack.nn import FlowStack, StyleEncoder, gaussian_kl, rsample
from voicestack.synthesizer.generator import SourceGenerator, WaveformGenerator
from voicestack.synthesizer.modules import (
    AcousticPrior,
    DualAudioEncoder,
    ProsodyDecoder,
    SourceFilterEncoder,
)


@dataclass
class SynthLossReport:
    recon_mel: float = 0.0
    pitch: float = 0.0
    kl_acoustic: float = 0.0
    kl_semantic: float = 0.0
    prosody: float = 0.0
    adv_g: float = 0.0
    fm: float = 0.0
    bi_flow: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def null_style_dropout(style: torch.Tensor, null_style: torch.Tensor, p: float,
                       mask: torch.Tensor | None = None) -> torch.Tensor:
    """Swap each row of ``style`` for the learned null embedding with prob p."""
    if mask is None:
        if p <= 0.0:
            return style
        mask = torch.rand(style.shape[0], device=style.device) < p
    mask = mask.view(-1, 1).to(style.dtype)
    return style * (1.0 - mask) + null_style.unsqueeze(0) * mask


def assemble_loss_report(parts: dict, train_cfg: TrainConfig):
    """Weighted sum of the generator objective; returns (tensor, report)."""
    w = train_cfg
    fm = parts.get("fm")
    if fm is None or not w.fm_enabled:
        fm = torch.zeros((), device=parts["recon_mel"].device)
    total = (
        w.weight_recon * parts["recon_mel"]
        + w.weight_pitch * parts["pitch"]
        + w.weight_kl * parts["kl_acoustic"]
        + w.weight_kl * parts["kl_semantic"]
        + w.weight_prosody * parts["prosody"]
        + w.weight_adv * parts["adv_g"]
        + w.weight_fm * fm
        + w.lambda_bi * parts["bi_flow"]
    )
    def _f(x):
        return float(x.detach()) if torch.is_tensor(x) else float(x)

    report = SynthLossReport(
        recon_mel=_f(parts["recon_mel"]),
        pitch=_f(parts["pitch"]),
        kl_acoustic=_f(parts["kl_acoustic"]),
        kl_semantic=_f(parts["kl_semantic"]),
        prosody=_f(parts["prosody"]),
        adv_g=_f(parts["adv_g"]),
        fm=_f(fm),
        bi_flow=_f(parts["bi_flow"]),
        total=_f(total),
    )
    return total, report


class HierarchicalSynthesizer(nn.Module):
    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        self.cfg = cfg
        self.style_encoder = StyleEncoder(80, cfg.style_hidden, cfg.style_dim)
        self.acoustic_encoder = DualAudioEncoder(cfg)
        self.sf_encoder = SourceFilterEncoder(cfg)
        self.flow_a = FlowStack(cfg.latent_dim, cfg.hidden, cfg.flow_filter,
                                cfg.flow_heads, cfg.flow_kernel, cfg.flow_dropout,
                                cfg.style_dim, cfg.flow_layers, cfg.flow_blocks)
        self.flow_sr = FlowStack(cfg.latent_dim, cfg.hidden, cfg.flow_filter,
                                 cfg.flow_heads, cfg.flow_kernel, cfg.flow_dropout,
                                 cfg.style_dim, cfg.flow_layers, cfg.flow_blocks)
        self.acoustic_prior = AcousticPrior(cfg)
        self.source_generator = SourceGenerator(cfg)
        self.waveform_generator = WaveformGenerator(cfg)
        self.prosody_decoder = ProsodyDecoder(cfg)
        self.null_style = nn.Parameter(torch.zeros(cfg.style_dim))
        self.mel = SpectrogramTransform(16000)
        self.hop = 320

    def encode_style(self, mel: torch.Tensor) -> torch.Tensor:
        return self.style_encoder(mel)

    def elbo_terms(self, posterior_a, prior_a, posterior_sr, prior_sr):
        """Closed-form diagonal-Gaussian KLs; priors arrive flow-transported."""
        kl_acoustic = gaussian_kl(posterior_a.mean, posterior_a.log_var,
                                  prior_a[0], prior_a[1])
        kl_semantic = gaussian_kl(posterior_sr.mean, posterior_sr.log_var,
                                  prior_sr[0], prior_sr[1])
        return kl_acoustic, kl_semantic

    def training_forward(self, batch: dict, train_cfg: TrainConfig, *,
                         window_start: int | None = None,
                         style_mask: torch.Tensor | None = None,
                         eps_a: torch.Tensor | None = None,
                         eps_sr: torch.Tensor | None = None) -> dict:
        """Everything the generator optimization step needs except the
        adversarial terms (the harness owns the discriminators)."""
        wav, linspec, mel = batch["wav"], batch["linspec"], batch["mel"]
        f0, voiced = batch["f0"], batch["voiced"]

        style = self.encode_style(mel)
        if self.training:
            style = null_style_dropout(style, self.null_style,
                                       train_cfg.null_style_p, style_mask)

        posterior_a = self.acoustic_encoder(wav, linspec, eps=eps_a)
        prior_sr, posterior_sr, _ = self.sf_encoder(
            batch["semantic"], batch["semantic_pert"], f0, voiced, eps=eps_sr)
        prior_a = self.acoustic_prior(posterior_sr.sample)

        # main KLs in posterior space: prior means cross the reverse flow
        prior_a_t = (self.flow_a.transport(prior_a[0], style, "reverse"), prior_a[1])
        prior_sr_t = (self.flow_sr.transport(prior_sr[0], style, "reverse"),
                      prior_sr[1])
        kl_acoustic, kl_semantic = self.elbo_terms(
            posterior_a, prior_a_t, posterior_sr, prior_sr_t)

        # bidirectional term: posterior means cross the forward flow
        if train_cfg.lambda_bi > 0:
            q_a_fwd = self.flow_a.transport(posterior_a.mean, style, "forward")
            q_sr_fwd = self.flow_sr.transport(posterior_sr.mean, style, "forward")
            bi_flow = (
                gaussian_kl(q_a_fwd, posterior_a.log_var, prior_a[0], prior_a[1])
                + gaussian_kl(q_sr_fwd, posterior_sr.log_var,
                              prior_sr[0], prior_sr[1])
            )
        else:
            bi_flow = torch.zeros((), device=wav.device)

        # source generator on the full slice; F0 target is 0 on unvoiced frames
        p_h, f0_pred = self.source_generator(posterior_a.sample, style)
        t4 = min(f0_pred.shape[-1], f0.shape[-1])
        pitch = (f0[..., :t4] * voiced[..., :t4] - f0_pred[..., :t4]).abs().mean()

        # windowed generator training: decode only a short window
        frames = posterior_a.sample.shape[-1]
        win_frames = min(train_cfg.generator_window_samples // self.hop, frames)
        if window_start is None:
            max_start = frames - win_frames
            window_start = int(torch.randint(0, max_start + 1, (1,)).item())
        ws = window_start
        z_win = posterior_a.sample[..., ws:ws + win_frames]
        ph_win = p_h[..., ws * 4:(ws + win_frames) * 4]
        wav_win = wav[..., ws * self.hop:(ws + win_frames) * self.hop]
        y_hat = self.waveform_generator(z_win, ph_win, style)

        mel_real = self.mel(wav_win)
        mel_fake = self.mel(y_hat)
        recon_mel = (mel_real - mel_fake).abs().mean()

        prosody_hat = self.prosody_decoder(posterior_sr.sample, style)
        tp = min(prosody_hat.shape[-1], mel.shape[-1])
        prosody = (mel[:, : self.cfg.prosody_bins, :tp]
                   - prosody_hat[..., :tp]).abs().mean()

        return {
            "recon_mel": recon_mel,
            "pitch": pitch,
            "kl_acoustic": kl_acoustic,
            "kl_semantic": kl_semantic,
            "prosody": prosody,
            "bi_flow": bi_flow,
            "y_hat": y_hat,
            "wav_win": wav_win,
            "window_start": ws,
            "style": style,
            "posterior_a": posterior_a,
            "posterior_sr": posterior_sr,
        }

    @torch.no_grad()
    def synthesize(self, semantic: torch.Tensor, f0: torch.Tensor,
                   voiced: torch.Tensor, voice_mel: torch.Tensor | None = None,
                   t_h: float = 0.333, style: torch.Tensor | None = None,
                   eps_sr: torch.Tensor | None = None,
                   eps_a: torch.Tensor | None = None) -> torch.Tensor:
        """Prior-path inference: condition c -> z_sr -> z_a -> waveform.

        Style comes from ``voice_mel`` unless a precomputed ``style`` vector
        is handed in.  Temperature scales the prior std; values at or below
        the deterministic threshold collapse to the mean.
        """
        if t_h <= 0:
            raise ValueError("t_h must be > 0 (use a tiny value for near-greedy)")
        if style is None:
            if voice_mel is None:
                raise ValueError("synthesize needs voice_mel or style")
            style = self.encode_style(voice_mel)
        mean_sr, logvar_sr = self.sf_encoder.prior(semantic, f0, voiced)
        z_sr = rsample(mean_sr, logvar_sr, eps_sr, temperature=t_h).sample
        z_sr = self.flow_sr.inverse(z_sr, style)
        mean_a, logvar_a = self.acoustic_prior(z_sr)
        z_a = rsample(mean_a, logvar_a, eps_a, temperature=t_h).sample
        z_a = self.flow_a.inverse(z_a, style)
        p_h, _ = self.source_generator(z_a, style)
        return self.waveform_generator(z_a, p_h, style)

    @torch.no_grad()
    def reconstruct(self, wav: torch.Tensor, linspec: torch.Tensor,
                    voice_mel: torch.Tensor) -> torch.Tensor:
        """Posterior-path resynthesis (acoustic posterior mean -> generator)."""
        style = self.encode_style(voice_mel)
        posterior = self.acoustic_encoder(wav, linspec,
                                          eps=torch.zeros(1, device=wav.device))
        z_a = posterior.mean
        p_h, _ = self.source_generator(z_a, style)
        return self.waveform_generator(z_a, p_h, style)
