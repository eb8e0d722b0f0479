"""Training loops for the three models.

Shared recipe: AdamW (beta1 0.8, beta2 0.99, weight decay 0.01),
exponential LR decay applied once per epoch over the manifest,
alternating D/G steps for the adversarial models, JSONL loss logging,
periodic checkpoints, NaN abort pointing at the last good checkpoint,
and bit-identical resume (all RNG streams captured).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import torch
from torch import optim

from voicestack import utils
from voicestack.adversarial import (
    MultiPeriodDiscriminator,
    MultiScaleStftDiscriminator,
    SubBandDiscriminator,
    feature_matching_loss,
    lsgan_d_loss,
    lsgan_g_loss,
)
from voicestack.checkpoint import load_checkpoint, save_checkpoint
from voicestack.config import (
    SpeechSRConfig,
    SynthesizerConfig,
    TrainConfig,
    TTVConfig,
)
from voicestack.data import (
    make_batch,
    make_sr_batch,
    make_ttv_batch,
    prepare_corpus,
    prepare_sr_corpus,
    read_manifest,
)
from voicestack.semantic import SurrogateSemanticEncoder
from voicestack.sr import SpeechSR, sr_mel_transform
from voicestack.synthesizer import HierarchicalSynthesizer, assemble_loss_report
from voicestack.ttv import TextToVec, Tokenizer


class TrainingDiverged(RuntimeError):
    def __init__(self, step, last_checkpoint):
        super().__init__(
            f"non-finite loss at step {step}; last good checkpoint: "
            f"{last_checkpoint or 'none written yet'}")
        self.last_checkpoint = last_checkpoint


def _adamw(params, cfg: TrainConfig, lr=None):
    return optim.AdamW(params, lr=lr or cfg.lr, betas=(cfg.beta1, cfg.beta2),
                       weight_decay=cfg.weight_decay)


def _log_line(log_file, record: dict) -> None:
    if log_file is not None:
        log_file.write(json.dumps(record) + "\n")
        log_file.flush()


class _Loop:
    """Bookkeeping shared by the three trainers: epochs, logging,
    checkpointing, RNG capture, resume."""

    def __init__(self, kind, out_dir, cfg, train_cfg, n_utts):
        self.kind = kind
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.train_cfg = train_cfg
        self.steps_per_epoch = max(1, n_utts // max(train_cfg.batch, 1))
        self.step = 0
        self.history = []
        self.last_checkpoint = None
        self.log_path = self.out_dir / f"{kind}_log.jsonl"

    def epoch_boundary(self) -> bool:
        return self.step % self.steps_per_epoch == 0

    def checkpoint_path(self, step=None) -> Path:
        return self.out_dir / f"{self.kind}_{step if step is not None else self.step:07d}.pt"


def train_synth(manifest_path, cfg: SynthesizerConfig, train_cfg: TrainConfig,
                out_dir, resume=None, encoder: SurrogateSemanticEncoder | None = None,
                cache_dir=None, prepared=None) -> dict:
    """Returns {"history": [...], "checkpoint": final path}."""
    utils.seed_everything(train_cfg.seed)
    encoder = encoder or SurrogateSemanticEncoder(cfg.semantic_dim)
    if prepared is None:
        prepared = prepare_corpus(manifest_path, encoder,
                                  train_cfg.perturb_variants, cache_dir)

    model = HierarchicalSynthesizer(cfg)
    mpd = MultiPeriodDiscriminator(channels=cfg.mpd_channels)
    stftd = MultiScaleStftDiscriminator(channels=cfg.stftd_channels)
    opt_g = _adamw(model.parameters(), train_cfg)
    opt_d = _adamw(list(mpd.parameters()) + list(stftd.parameters()), train_cfg)
    sch_g = optim.lr_scheduler.ExponentialLR(opt_g, train_cfg.lr_decay)
    sch_d = optim.lr_scheduler.ExponentialLR(opt_d, train_cfg.lr_decay)
    data_rng = np.random.default_rng(train_cfg.seed + 1)

    loop = _Loop("synth", out_dir, cfg, train_cfg, len(prepared))
    modules = {"model": model, "mpd": mpd, "stftd": stftd}
    optimizers = {"g": opt_g, "d": opt_d}
    schedulers = {"g": sch_g, "d": sch_d}

    if resume is not None:
        payload = load_checkpoint(resume, "synth", cfg)
        for name, m in modules.items():
            m.load_state_dict(payload["state"][name])
        for name, o in optimizers.items():
            o.load_state_dict(payload["optim"][name])
        for name, s in schedulers.items():
            s.load_state_dict(payload["sched"][name])
        utils.set_rng_state(payload["rng"])
        data_rng.bit_generator.state = payload["data_rng"]
        loop.step = payload["step"]

    def _save():
        save_checkpoint(loop.checkpoint_path(), "synth", modules, cfg, train_cfg,
                        loop.step, optimizers, schedulers,
                        data_rng.bit_generator.state,
                        extra={"semantic_dim": cfg.semantic_dim,
                               "surrogate_seed": encoder.seed})
        loop.last_checkpoint = loop.checkpoint_path()

    model.train()
    with open(loop.log_path, "a") as log_file:
        while loop.step < train_cfg.steps:
            batch = make_batch(prepared, train_cfg, data_rng)
            parts = model.training_forward(batch, train_cfg)
            y, x = parts["y_hat"], parts["wav_win"]

            opt_d.zero_grad()
            d_loss = (lsgan_d_loss(mpd(x), mpd(y.detach()))
                      + lsgan_d_loss(stftd(x), stftd(y.detach())))
            d_loss.backward()
            opt_d.step()

            opt_g.zero_grad()
            real_m, fake_m = mpd(x), mpd(y)
            real_s, fake_s = stftd(x), stftd(y)
            parts["adv_g"] = lsgan_g_loss(fake_m) + lsgan_g_loss(fake_s)
            parts["fm"] = (feature_matching_loss(real_m, fake_m)
                           + feature_matching_loss(real_s, fake_s))
            total, report = assemble_loss_report(parts, train_cfg)
            total.backward()
            opt_g.step()

            loop.step += 1
            if not math.isfinite(report.total) or not math.isfinite(float(d_loss.detach())):
                raise TrainingDiverged(loop.step, loop.last_checkpoint)
            if loop.epoch_boundary():
                sch_g.step()
                sch_d.step()
            record = {"step": loop.step, "d_loss": float(d_loss.detach()),
                      "lr": sch_g.get_last_lr()[0], **report.as_dict()}
            loop.history.append(record)
            if loop.step % train_cfg.log_every == 0 or loop.step == 1:
                _log_line(log_file, record)
            if loop.step % train_cfg.checkpoint_every == 0:
                _save()
        _save()
    return {"history": loop.history, "checkpoint": str(loop.last_checkpoint)}


def train_ttv(manifest_path, cfg: TTVConfig, train_cfg: TrainConfig, out_dir,
              resume=None, encoder: SurrogateSemanticEncoder | None = None,
              cache_dir=None, prepared=None, tokenizer: Tokenizer | None = None) -> dict:
    utils.seed_everything(train_cfg.seed)
    encoder = encoder or SurrogateSemanticEncoder(cfg.semantic_dim)
    if prepared is None:
        prepared = prepare_corpus(manifest_path, encoder,
                                  perturb_variants=0, cache_dir=cache_dir,
                                  require_text=True)
    if tokenizer is None:
        tokenizer = Tokenizer.build([u.text for u in prepared if u.text])
    cfg.vocab_size = tokenizer.size

    model = TextToVec(cfg)
    opt = _adamw(model.parameters(), train_cfg)
    sch = optim.lr_scheduler.ExponentialLR(opt, train_cfg.lr_decay)
    data_rng = np.random.default_rng(train_cfg.seed + 2)

    loop = _Loop("ttv", out_dir, cfg, train_cfg, len(prepared))
    if resume is not None:
        payload = load_checkpoint(resume, "ttv", cfg)
        model.load_state_dict(payload["state"]["model"])
        opt.load_state_dict(payload["optim"]["opt"])
        sch.load_state_dict(payload["sched"]["sch"])
        utils.set_rng_state(payload["rng"])
        data_rng.bit_generator.state = payload["data_rng"]
        loop.step = payload["step"]

    def _save():
        save_checkpoint(loop.checkpoint_path(), "ttv", {"model": model}, cfg,
                        train_cfg, loop.step, {"opt": opt}, {"sch": sch},
                        data_rng.bit_generator.state,
                        extra={"tokens": tokenizer.tokens,
                               "surrogate_seed": encoder.seed})
        loop.last_checkpoint = loop.checkpoint_path()

    model.train()
    with open(loop.log_path, "a") as log_file:
        while loop.step < train_cfg.steps:
            batch = make_ttv_batch(prepared, tokenizer, train_cfg, data_rng)
            opt.zero_grad()
            total, report = model.training_forward(batch, train_cfg)
            total.backward()
            opt.step()
            loop.step += 1
            if not math.isfinite(report.total):
                raise TrainingDiverged(loop.step, loop.last_checkpoint)
            if loop.epoch_boundary():
                sch.step()
            record = {"step": loop.step, "lr": sch.get_last_lr()[0],
                      **report.as_dict()}
            loop.history.append(record)
            if loop.step % train_cfg.log_every == 0 or loop.step == 1:
                _log_line(log_file, record)
            if loop.step % train_cfg.checkpoint_every == 0:
                _save()
        _save()
    return {"history": loop.history, "checkpoint": str(loop.last_checkpoint),
            "tokenizer": tokenizer}


def train_sr(manifest_path, cfg: SpeechSRConfig, train_cfg: TrainConfig, out_dir,
             resume=None, prepared=None) -> dict:
    utils.seed_everything(train_cfg.seed)
    if prepared is None:
        prepared = prepare_sr_corpus(manifest_path)

    model = SpeechSR(cfg)
    mpd = MultiPeriodDiscriminator(channels=cfg.mpd_channels)
    stftd = MultiScaleStftDiscriminator(cfg.stftd_windows, cfg.stftd_channels)
    dwtd = SubBandDiscriminator(cfg.dwtd_levels, cfg.dwtd_channels)
    mel = sr_mel_transform(cfg)
    opt_g = _adamw(model.parameters(), train_cfg)
    d_params = (list(mpd.parameters()) + list(stftd.parameters())
                + list(dwtd.parameters()))
    opt_d = _adamw(d_params, train_cfg)
    sch_g = optim.lr_scheduler.ExponentialLR(opt_g, train_cfg.lr_decay)
    sch_d = optim.lr_scheduler.ExponentialLR(opt_d, train_cfg.lr_decay)
    data_rng = np.random.default_rng(train_cfg.seed + 3)

    loop = _Loop("sr", out_dir, cfg, train_cfg, len(prepared))
    modules = {"model": model, "mpd": mpd, "stftd": stftd, "dwtd": dwtd}
    optimizers = {"g": opt_g, "d": opt_d}
    schedulers = {"g": sch_g, "d": sch_d}
    if resume is not None:
        payload = load_checkpoint(resume, "sr", cfg)
        for name, m in modules.items():
            m.load_state_dict(payload["state"][name])
        for name, o in optimizers.items():
            o.load_state_dict(payload["optim"][name])
        for name, s in schedulers.items():
            s.load_state_dict(payload["sched"][name])
        utils.set_rng_state(payload["rng"])
        data_rng.bit_generator.state = payload["data_rng"]
        loop.step = payload["step"]

    def _save():
        save_checkpoint(loop.checkpoint_path(), "sr", modules, cfg, train_cfg,
                        loop.step, optimizers, schedulers,
                        data_rng.bit_generator.state)
        loop.last_checkpoint = loop.checkpoint_path()

    model.train()
    with open(loop.log_path, "a") as log_file:
        while loop.step < train_cfg.steps:
            batch = make_sr_batch(prepared, train_cfg, data_rng)
            lo, hi = batch["lowres"], batch["highres"]
            y = model(lo)

            opt_d.zero_grad()
            d_loss = (lsgan_d_loss(mpd(hi), mpd(y.detach()))
                      + lsgan_d_loss(stftd(hi), stftd(y.detach()))
                      + lsgan_d_loss(dwtd(hi), dwtd(y.detach())))
            d_loss.backward()
            opt_d.step()

            opt_g.zero_grad()
            outs_real = [mpd(hi), stftd(hi), dwtd(hi)]
            outs_fake = [mpd(y), stftd(y), dwtd(y)]
            adv_g = sum(lsgan_g_loss(f) for f in outs_fake)
            fm = sum(feature_matching_loss(r, f)
                     for r, f in zip(outs_real, outs_fake))
            recon = (mel(hi) - mel(y)).abs().mean()
            total = (train_cfg.weight_recon * recon
                     + train_cfg.weight_adv * adv_g
                     + (train_cfg.weight_fm * fm if train_cfg.fm_enabled else 0.0))
            total.backward()
            opt_g.step()

            loop.step += 1
            if not math.isfinite(float(total.detach())) or not math.isfinite(float(d_loss.detach())):
                raise TrainingDiverged(loop.step, loop.last_checkpoint)
            if loop.epoch_boundary():
                sch_g.step()
                sch_d.step()
            record = {"step": loop.step, "recon_mel": float(recon.detach()),
                      "adv_g": float(adv_g.detach()), "fm": float(fm.detach()),
                      "d_loss": float(d_loss.detach()), "total": float(total.detach()),
                      "lr": sch_g.get_last_lr()[0]}
            loop.history.append(record)
            if loop.step % train_cfg.log_every == 0 or loop.step == 1:
                _log_line(log_file, record)
            if loop.step % train_cfg.checkpoint_every == 0:
                _save()
        _save()
    return {"history": loop.history, "checkpoint": str(loop.last_checkpoint)}
