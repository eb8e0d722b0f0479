"""Corpus handling: manifests, per-utterance feature preparation, caches,
and training batch assembly.

A manifest is JSON lines of {"wav": path, "duration": seconds,
"text": optional transcript} with paths relative to the manifest.
Features are computed once per utterance (spectrograms, F0, semantic
features plus a few perturbed variants) and optionally persisted via the
``features`` CLI so repeated runs skip the DSP.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from voicestack.audio.io import Waveform, read_wav
from voicestack.audio.perturb import perturb
from voicestack.audio.pitch import extract_f0
from voicestack.audio.spectrogram import linear_spectrogram, mel_spectrogram
from voicestack.config import TrainConfig
from voicestack.semantic import SurrogateSemanticEncoder, audio_hash
from voicestack.tensorio import read_tensor, write_tensor

HOP = 320
F0_HOP = 80


class CorpusError(ValueError):
    pass


def write_manifest(path, entries) -> None:
    with open(path, "w") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")


def read_manifest(path) -> list[dict]:
    path = Path(path)
    entries = []
    with open(path) as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            e = json.loads(line)
            if "wav" not in e:
                raise CorpusError(f"{path}:{i + 1}: manifest entry missing 'wav'")
            entries.append(e)
    if not entries:
        raise CorpusError(f"{path}: empty manifest")
    return entries


def index_corpus(wav_dir, manifest_path=None) -> Path:
    """Scan a directory of WAVs (plus optional .txt transcripts) into a manifest."""
    wav_dir = Path(wav_dir)
    entries = []
    for wav_path in sorted(wav_dir.glob("*.wav")):
        wav = read_wav(wav_path)
        entry = {"wav": wav_path.name, "duration": wav.duration}
        txt = wav_path.with_suffix(".txt")
        if txt.exists():
            entry["text"] = txt.read_text().strip()
        entries.append(entry)
    if not entries:
        raise CorpusError(f"no WAV files under {wav_dir}")
    manifest_path = Path(manifest_path or wav_dir / "manifest.jsonl")
    write_manifest(manifest_path, entries)
    return manifest_path


@dataclass
class PreparedUtterance:
    """All per-utterance features trimmed to one canonical frame grid:
    T = samples // 320 feature frames and exactly 4T F0 frames."""

    wav: np.ndarray                 # [T * 320]
    linspec: np.ndarray             # [641, T]
    mel: np.ndarray                 # [80, T]
    semantic: np.ndarray            # [D, T]
    semantic_pert: list             # K x [D, T]
    f0: np.ndarray                  # [4T]
    voiced: np.ndarray              # [4T]
    text: str | None = None

    @property
    def frames(self) -> int:
        return self.linspec.shape[1]


def prepare_utterance(wav: Waveform, encoder: SurrogateSemanticEncoder,
                      perturb_variants: int = 2, seed: int = 0,
                      text: str | None = None) -> PreparedUtterance:
    t = len(wav.samples) // HOP
    samples = wav.samples[: t * HOP]
    clipped = Waveform(samples, wav.sample_rate)

    lin = linear_spectrogram(clipped).values.T[:, :t]
    mel = mel_spectrogram(clipped).values.T[:, :t]
    sem = encoder(clipped).values.T[:, :t]
    f0c = extract_f0(clipped)
    f0 = f0c.hz[: 4 * t].astype(np.float32)
    voiced = f0c.voiced[: 4 * t].astype(np.float32)

    perts = []
    for k in range(perturb_variants):
        p = perturb(clipped, seed * 1000 + k)
        perts.append(encoder(p).values.T[:, :t])

    return PreparedUtterance(samples, lin, mel, sem, perts, f0, voiced, text)


def _cache_key(wav: Waveform) -> str:
    return audio_hash(wav)


def prepare_corpus(manifest_path, encoder: SurrogateSemanticEncoder,
                   perturb_variants: int = 2, cache_dir=None,
                   require_text: bool = False) -> list[PreparedUtterance]:
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    entries = read_manifest(manifest_path)
    prepared = []
    for i, entry in enumerate(entries):
        if require_text and not entry.get("text"):
            raise CorpusError(
                f"{manifest_path}: entry {entry['wav']} has no transcript "
                "(required for text-to-vec training)")
        wav = read_wav(root / entry["wav"])
        if wav.sample_rate != 16000:
            raise CorpusError(
                f"{entry['wav']}: expected 16 kHz, got {wav.sample_rate}")
        if cache_dir is not None:
            cached = load_cached_features(cache_dir, wav, perturb_variants,
                                          entry.get("text"))
            if cached is not None:
                prepared.append(cached)
                continue
        utt = prepare_utterance(wav, encoder, perturb_variants, seed=i,
                                text=entry.get("text"))
        if cache_dir is not None:
            save_cached_features(cache_dir, wav, utt)
        prepared.append(utt)
    return prepared


def save_cached_features(cache_dir, wav: Waveform, utt: PreparedUtterance) -> None:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = _cache_key(wav)
    stacked = {
        "wav": utt.wav, "linspec": utt.linspec, "mel": utt.mel,
        "semantic": utt.semantic, "f0": utt.f0, "voiced": utt.voiced,
    }
    for name, arr in stacked.items():
        write_tensor(cache_dir / f"{key}_{name}.tnsr", arr,
                     {"source_audio_hash": key, "frame_rate": 50,
                      "dim": int(arr.shape[0]) if arr.ndim == 2 else 1,
                      "layer_index": -1})
    for k, p in enumerate(utt.semantic_pert):
        write_tensor(cache_dir / f"{key}_pert{k}.tnsr", p,
                     {"source_audio_hash": key, "variant": k})


def load_cached_features(cache_dir, wav: Waveform, perturb_variants: int,
                         text: str | None) -> PreparedUtterance | None:
    cache_dir = Path(cache_dir)
    key = _cache_key(wav)
    names = ["wav", "linspec", "mel", "semantic", "f0", "voiced"]
    paths = [cache_dir / f"{key}_{n}.tnsr" for n in names]
    pert_paths = [cache_dir / f"{key}_pert{k}.tnsr" for k in range(perturb_variants)]
    if not all(p.exists() for p in paths + pert_paths):
        return None
    arrays = [read_tensor(p)[0] for p in paths]
    perts = [read_tensor(p)[0] for p in pert_paths]
    return PreparedUtterance(arrays[0], arrays[1], arrays[2], arrays[3], perts,
                             arrays[4], arrays[5], text)


def make_batch(prepared: list[PreparedUtterance], cfg: TrainConfig,
               rng: np.random.Generator) -> dict:
    """Random aligned slices of ``slice_samples`` across the corpus."""
    slice_frames = cfg.slice_samples // HOP
    usable = [u for u in prepared if u.frames >= slice_frames]
    if not usable:
        raise CorpusError(
            f"no utterance holds {cfg.slice_samples} samples "
            f"({slice_frames} frames); shorten slice_samples or pad the corpus")
    wavs, lins, mels, sems, perts, f0s, voiceds = [], [], [], [], [], [], []
    for _ in range(cfg.batch):
        u = usable[int(rng.integers(len(usable)))]
        fs = int(rng.integers(0, u.frames - slice_frames + 1))
        sl = slice(fs, fs + slice_frames)
        wavs.append(u.wav[fs * HOP: (fs + slice_frames) * HOP])
        lins.append(u.linspec[:, sl])
        mels.append(u.mel[:, sl])
        sems.append(u.semantic[:, sl])
        k = int(rng.integers(len(u.semantic_pert)))
        perts.append(u.semantic_pert[k][:, sl])
        f0s.append(u.f0[fs * 4: (fs + slice_frames) * 4])
        voiceds.append(u.voiced[fs * 4: (fs + slice_frames) * 4])
    return {
        "wav": torch.from_numpy(np.stack(wavs)),
        "linspec": torch.from_numpy(np.stack(lins)),
        "mel": torch.from_numpy(np.stack(mels)),
        "semantic": torch.from_numpy(np.stack(sems)),
        "semantic_pert": torch.from_numpy(np.stack(perts)),
        "f0": torch.from_numpy(np.stack(f0s)),
        "voiced": torch.from_numpy(np.stack(voiceds)),
    }


def make_ttv_batch(prepared: list[PreparedUtterance], tokenizer, cfg: TrainConfig,
                   rng: np.random.Generator, max_frames: int = 600) -> dict:
    """Full (optionally head-truncated) utterances, padded and masked."""
    with_text = [u for u in prepared if u.text]
    if not with_text:
        raise CorpusError("text-to-vec training needs transcripts in the manifest")
    chosen = [with_text[int(rng.integers(len(with_text)))] for _ in range(cfg.batch)]
    token_seqs = [tokenizer.encode(u.text) for u in chosen]
    ctc_seqs = [tokenizer.ctc_targets(u.text) for u in chosen]
    t_max = min(max(u.frames for u in chosen), max_frames)
    n_max = max(len(s) for s in token_seqs)
    l_max = max(len(s) for s in ctc_seqs)
    b = len(chosen)

    sem_dim = chosen[0].semantic.shape[0]
    tokens = torch.zeros(b, n_max, dtype=torch.long)
    token_mask = torch.zeros(b, n_max)
    semantic = torch.zeros(b, sem_dim, t_max)
    frame_mask = torch.zeros(b, t_max)
    mel = torch.full((b, 80, t_max), float(np.log(1e-5)))
    f0 = torch.zeros(b, 4 * t_max)
    voiced = torch.zeros(b, 4 * t_max)
    ctc_targets = torch.zeros(b, l_max, dtype=torch.long)
    ctc_lengths = torch.zeros(b, dtype=torch.long)
    for i, (u, toks, ctc) in enumerate(zip(chosen, token_seqs, ctc_seqs)):
        t = min(u.frames, t_max)
        tokens[i, : len(toks)] = torch.tensor(toks)
        token_mask[i, : len(toks)] = 1.0
        semantic[i, :, :t] = torch.from_numpy(u.semantic[:, :t])
        frame_mask[i, :t] = 1.0
        mel[i, :, :t] = torch.from_numpy(u.mel[:, :t])
        f0[i, : 4 * t] = torch.from_numpy(u.f0[: 4 * t])
        voiced[i, : 4 * t] = torch.from_numpy(u.voiced[: 4 * t])
        ctc_lengths[i] = len(ctc)
        ctc_targets[i, : len(ctc)] = torch.tensor(ctc)
    return {
        "tokens": tokens, "token_mask": token_mask,
        "semantic": semantic, "frame_mask": frame_mask, "mel": mel,
        "f0": f0, "voiced": voiced,
        "ctc_targets": ctc_targets, "ctc_lengths": ctc_lengths,
    }


@dataclass
class SRUtterance:
    wav48: np.ndarray
    wav16: np.ndarray


def prepare_sr_corpus(manifest_path) -> list[SRUtterance]:
    from voicestack.deskcorpus import decimate_to_16k

    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    out = []
    for entry in read_manifest(manifest_path):
        wav = read_wav(root / entry["wav"])
        if wav.sample_rate != 48000:
            raise CorpusError(f"{entry['wav']}: expected 48 kHz, got {wav.sample_rate}")
        n = (len(wav.samples) // 3) * 3
        wav = Waveform(wav.samples[:n], 48000)
        lo = decimate_to_16k(wav)
        out.append(SRUtterance(wav.samples, lo.samples))
    return out


def make_sr_batch(prepared: list[SRUtterance], cfg: TrainConfig,
                  rng: np.random.Generator, window_16k: int = 3200) -> dict:
    usable = [u for u in prepared if len(u.wav16) >= window_16k]
    if not usable:
        raise CorpusError(f"no 48 kHz clip holds {window_16k * 3} samples")
    lo, hi = [], []
    for _ in range(cfg.batch):
        u = usable[int(rng.integers(len(usable)))]
        s = int(rng.integers(0, len(u.wav16) - window_16k + 1))
        lo.append(u.wav16[s: s + window_16k])
        hi.append(u.wav48[3 * s: 3 * (s + window_16k)])
    return {
        "lowres": torch.from_numpy(np.stack(lo)),
        "highres": torch.from_numpy(np.stack(hi)),
    }
