"""Information perturbation: scrubs speaker identity while keeping content.

Composition of three independently toggleable stages:
  1. formant/pitch shift by a uniform ratio (resample, then phase-vocoder
     stretch back to the original duration),
  2. random parametric EQ over log-spaced bands (+-6 dB),
  3. pitch randomization by a uniform semitone offset (same mechanism).

Identity parameters short-circuit each stage, so a draw forced to the
identity returns the input bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voicestack.audio.io import Waveform, resample

PV_NFFT = 1024
PV_HOP = 256


@dataclass
class PerturbConfig:
    formant_shift: bool = True
    formant_range: tuple[float, float] = (0.85, 1.15)
    eq: bool = True
    eq_bands: int = 8
    eq_db: float = 6.0
    pitch_shift: bool = True
    pitch_semitones: float = 4.0


def _stft(x: np.ndarray) -> np.ndarray:
    win = np.hanning(PV_NFFT)
    pad = np.concatenate([np.zeros(PV_NFFT // 2), x, np.zeros(PV_NFFT)])
    n_frames = 1 + (len(pad) - PV_NFFT) // PV_HOP
    idx = np.arange(n_frames)[:, None] * PV_HOP + np.arange(PV_NFFT)[None, :]
    return np.fft.rfft(pad[idx] * win, axis=1).T  # [F, T]


def _istft(spec: np.ndarray, length: int) -> np.ndarray:
    win = np.hanning(PV_NFFT)
    frames = np.fft.irfft(spec.T, axis=1) * win
    out = np.zeros(PV_NFFT // 2 + length + 2 * PV_NFFT)
    norm = np.zeros_like(out)
    wsq = win * win
    for i in range(frames.shape[0]):
        start = i * PV_HOP
        out[start:start + PV_NFFT] += frames[i]
        norm[start:start + PV_NFFT] += wsq
    out = out[PV_NFFT // 2: PV_NFFT // 2 + length]
    norm = norm[PV_NFFT // 2: PV_NFFT // 2 + length]
    return out / np.maximum(norm, 1e-8)


def time_stretch(x: np.ndarray, factor: float) -> np.ndarray:
    """Phase-vocoder stretch: output has ~factor * len(x) samples, same pitch."""
    if factor == 1.0:
        return x.copy()
    spec = _stft(x.astype(np.float64))
    n_bins, n_frames = spec.shape
    out_frames = max(int(np.ceil(n_frames * factor)), 2)
    steps = np.minimum(np.arange(out_frames) / factor, n_frames - 1.001)
    omega = 2.0 * np.pi * PV_HOP * np.arange(n_bins) / PV_NFFT
    out = np.zeros((n_bins, out_frames), dtype=np.complex128)
    phase = np.angle(spec[:, 0])
    for k, t in enumerate(steps):
        i = int(t)
        frac = t - i
        mag = (1 - frac) * np.abs(spec[:, i]) + frac * np.abs(spec[:, i + 1])
        out[:, k] = mag * np.exp(1j * phase)
        dphi = np.angle(spec[:, i + 1]) - np.angle(spec[:, i]) - omega
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        phase += omega + dphi
    return _istft(out, int(round(len(x) * factor)))


def _shift_ratio(x: np.ndarray, sr: int, factor: float) -> np.ndarray:
    """Shift pitch and formants by ``factor``, duration preserved."""
    if factor == 1.0:
        return x.copy()
    y = resample(x, sr, int(round(sr / factor)))
    y = time_stretch(y, len(x) / len(y))
    if len(y) < len(x):
        y = np.pad(y, (0, len(x) - len(y)))
    return y[: len(x)]


def _random_eq(x: np.ndarray, sr: int, gains_db: np.ndarray) -> np.ndarray:
    """Multiplicative spectral envelope interpolated between band gains."""
    if np.all(gains_db == 0.0):
        return x.copy()
    centers = np.geomspace(60.0, sr / 2.0 * 0.95, len(gains_db))
    freqs = np.fft.rfftfreq(len(x), 1.0 / sr)
    log_f = np.log(np.maximum(freqs, 1.0))
    env_db = np.interp(log_f, np.log(centers), gains_db)
    gain = 10.0 ** (env_db / 20.0)
    return np.fft.irfft(np.fft.rfft(x) * gain, len(x))


def perturb(wav: Waveform, rng_seed: int, config: PerturbConfig | None = None,
            force_formant: float | None = None, force_semitones: float | None = None,
            force_eq_db: np.ndarray | None = None) -> Waveform:
    """Apply the perturbation chain with parameters drawn from ``rng_seed``.

    The ``force_*`` arguments pin individual draws (used by tests and for
    reproducing a specific perturbation).
    """
    cfg = config or PerturbConfig()
    rng = np.random.default_rng(rng_seed)
    x = wav.samples.astype(np.float64)

    ratio = rng.uniform(*cfg.formant_range) if cfg.formant_shift else 1.0
    gains = (rng.uniform(-cfg.eq_db, cfg.eq_db, cfg.eq_bands)
             if cfg.eq else np.zeros(cfg.eq_bands))
    semitones = (rng.uniform(-cfg.pitch_semitones, cfg.pitch_semitones)
                 if cfg.pitch_shift else 0.0)
    if force_formant is not None:
        ratio = force_formant
    if force_eq_db is not None:
        gains = np.asarray(force_eq_db, dtype=np.float64)
    if force_semitones is not None:
        semitones = force_semitones

    x = _shift_ratio(x, wav.sample_rate, ratio)
    x = _random_eq(x, wav.sample_rate, gains)
    x = _shift_ratio(x, wav.sample_rate, 2.0 ** (semitones / 12.0))
    peak = np.max(np.abs(x))
    if peak > 0.99:
        x = x * (0.99 / peak)
    return Waveform(x.astype(np.float32), wav.sample_rate)
