"""Bundled synthetic corpus.

Speech-like utterances built from a small unit inventory: voiced units
are formant-filtered glottal pulse trains riding a slowly drifting F0,
unvoiced units are band-passed noise bursts, spaces are silence.  Every
utterance is generated from its transcript, so text/audio pairs carry
real structure for alignment and CTC; a handful of per-"speaker" formant
and pitch scalings give the style encoder something to separate.

Everything is deterministic in the seed, and a few minutes of audio is
enough for the smoke-training runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from voicestack.audio.io import Waveform, peak_normalize, resample, write_wav
from voicestack.data import write_manifest

VOWELS = {
    "a": (800, 1200), "e": (500, 1900), "i": (320, 2500),
    "o": (480, 900), "u": (350, 750),
}
CONSONANTS = {
    "s": (4500, 7000), "t": (2500, 5000), "k": (1500, 3500), "f": (3000, 6500),
}


@dataclass
class Speaker:
    formant_scale: float
    f0_base: float
    brightness: float


def _speakers(rng) -> list[Speaker]:
    out = []
    for _ in range(4):
        out.append(Speaker(
            formant_scale=float(rng.uniform(0.85, 1.2)),
            f0_base=float(rng.uniform(110.0, 240.0)),
            brightness=float(rng.uniform(0.3, 0.9)),
        ))
    return out


def _resonator(x, freq, sr, bw=120.0):
    r = np.exp(-np.pi * bw / sr)
    theta = 2 * np.pi * freq / sr
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return scipy.signal.lfilter([1.0 - r], a, x)


def _vowel(token, dur_s, f0_curve, sp: Speaker, sr, rng):
    n = int(dur_s * sr)
    f0 = f0_curve(n)
    phase = np.cumsum(2 * np.pi * f0 / sr)
    # impulse-ish glottal source: rich harmonics, brightness-shaped
    src = (np.sin(phase) + sp.brightness * 0.5 * np.sin(2 * phase)
           + sp.brightness * 0.3 * np.sin(3 * phase)
           + 0.35 * scipy.signal.square(phase, duty=0.3))
    f1, f2 = VOWELS[token]
    y = _resonator(src, f1 * sp.formant_scale, sr) \
        + 0.7 * _resonator(src, f2 * sp.formant_scale, sr)
    env = np.minimum(1.0, np.minimum(np.arange(n), n - np.arange(n)) / (0.02 * sr))
    return y * env


def _consonant(token, dur_s, sp: Speaker, sr, rng):
    n = int(dur_s * sr)
    lo, hi = CONSONANTS[token]
    hi = min(hi * sp.formant_scale, sr / 2 * 0.95)
    lo = min(lo * sp.formant_scale, hi * 0.6)
    noise = rng.normal(size=n)
    sos = scipy.signal.butter(4, [lo, hi], btype="band", fs=sr, output="sos")
    y = scipy.signal.sosfilt(sos, noise)
    env = np.exp(-np.arange(n) / (0.4 * n + 1))
    return y * env * 0.8


def synthesize_utterance(text: str, sp: Speaker, sr: int, rng) -> np.ndarray:
    base = sp.f0_base * rng.uniform(0.9, 1.1)
    drift_f = rng.uniform(0.3, 1.2)
    drift_a = rng.uniform(0.05, 0.20)
    t_off = rng.uniform(0, 10)

    clock = [0.0]

    def f0_curve(n):
        t = clock[0] + np.arange(n) / sr
        clock[0] += n / sr
        return base * (1 + drift_a * np.sin(2 * np.pi * drift_f * t + t_off))

    parts = [np.zeros(int(0.05 * sr))]
    for ch in text:
        if ch == " ":
            parts.append(np.zeros(int(rng.uniform(0.06, 0.15) * sr)))
        elif ch in VOWELS:
            parts.append(_vowel(ch, rng.uniform(0.10, 0.22), f0_curve, sp, sr, rng))
        elif ch in CONSONANTS:
            parts.append(_consonant(ch, rng.uniform(0.05, 0.10), sp, sr, rng))
    parts.append(np.zeros(int(0.05 * sr)))
    wav = np.concatenate(parts)
    return peak_normalize(wav, 0.95 * rng.uniform(0.6, 1.0))


def random_text(rng, n_syllables=None) -> str:
    n = n_syllables or int(rng.integers(6, 14))
    syll = []
    vowels = list(VOWELS)
    cons = list(CONSONANTS)
    for i in range(n):
        s = ""
        if rng.random() < 0.7:
            s += cons[rng.integers(len(cons))]
        s += vowels[rng.integers(len(vowels))]
        if rng.random() < 0.25:
            s += vowels[rng.integers(len(vowels))]
        syll.append(s)
        if rng.random() < 0.3 and i < n - 1:
            syll.append(" ")
    return "".join(syll)


def build_corpus(out_dir, minutes: float = 6.0, sample_rate: int = 16000,
                 seed: int = 77) -> Path:
    """Generate WAVs + manifest under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    speakers = _speakers(rng)
    entries = []
    total = 0.0
    idx = 0
    while total < minutes * 60.0:
        sp = speakers[idx % len(speakers)]
        text = random_text(rng)
        wav = synthesize_utterance(text, sp, sample_rate, rng)
        w = Waveform(wav.astype(np.float32), sample_rate)
        name = f"utt_{idx:04d}.wav"
        write_wav(out_dir / name, w)
        entries.append({"wav": name, "duration": w.duration, "text": text})
        total += w.duration
        idx += 1
    manifest = out_dir / "manifest.jsonl"
    write_manifest(manifest, entries)
    return manifest


def build_sr_corpus(out_dir, minutes: float = 3.0, seed: int = 78) -> Path:
    """48 kHz corpus for super-resolution: speech-like utterances plus tone
    sweeps reaching into the upper bands."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sr = 48000
    rng = np.random.default_rng(seed)
    speakers = _speakers(rng)
    entries = []
    total = 0.0
    idx = 0
    while total < minutes * 60.0:
        if idx % 5 == 4:
            dur = rng.uniform(2.0, 4.0)
            n = int(dur * sr)
            t = np.arange(n) / sr
            f_lo, f_hi = rng.uniform(200, 800), rng.uniform(6000, 20000)
            sweep = scipy.signal.chirp(t, f_lo, dur, f_hi, method="logarithmic")
            env = np.minimum(1.0, np.minimum(np.arange(n), n - np.arange(n)) / (0.02 * sr))
            wav = peak_normalize(sweep * env, 0.95 * rng.uniform(0.5, 0.9))
        else:
            sp = speakers[idx % len(speakers)]
            wav = synthesize_utterance(random_text(rng), sp, sr, rng)
        w = Waveform(wav.astype(np.float32), sr)
        name = f"sr_{idx:04d}.wav"
        write_wav(out_dir / name, w)
        entries.append({"wav": name, "duration": w.duration})
        total += w.duration
        idx += 1
    manifest = out_dir / "manifest.jsonl"
    write_manifest(manifest, entries)
    return manifest


def decimate_to_16k(wav: Waveform) -> Waveform:
    """Anti-aliased 3:1 decimation pairing for super-resolution training."""
    if wav.sample_rate != 48000:
        raise ValueError("expected 48 kHz input")
    return Waveform(resample(wav.samples, 48000, 16000), 16000)
