"""Waveform container, 16-bit PCM WAV I/O, rate conversion, peak normalization.

All pipeline audio is mono float in [-1, 1].  The only sample rates the
system touches are 16 kHz (synthesis), 24 kHz (common source material),
and 48 kHz (super-resolution), so the resampler is a plain polyphase
windowed-sinc for rational ratios rather than a general library.
"""

from __future__ import annotations

import io as _io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

PEAK_NORM = 0.95
SUPPORTED_RATES = (16000, 24000, 48000)


class AudioFormatError(ValueError):
    """Input bytes are not decodable audio."""


class AudioDomainError(ValueError):
    """Decodable input that violates a precondition (empty, wrong rate...)."""


@dataclass
class Waveform:
    """Mono audio: float samples plus their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise AudioDomainError("waveform must be mono 1-D")
        if len(self.samples) < 1:
            raise AudioDomainError("waveform must hold at least one sample")
        if self.sample_rate <= 0:
            raise AudioDomainError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def _sinc_kernel(up: int, down: int, taps_per_phase: int = 16, beta: float = 8.0) -> np.ndarray:
    """Kaiser-windowed sinc low-pass at the tighter of the two Nyquists."""
    cutoff = 1.0 / max(up, down)
    half = taps_per_phase * max(up, down)
    n = np.arange(-half, half + 1)
    kern = cutoff * np.sinc(cutoff * n) * np.kaiser(2 * half + 1, beta)
    return kern * up


def resample(samples: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Polyphase rational resampling src_rate -> dst_rate.

    Output length is ceil(len * dst/src), matching upsample-filter-decimate
    with a centered kernel.  The ratio is approximated by a small rational
    (denominator <= 64), exact for every rate pair the pipeline uses.
    """
    if src_rate == dst_rate:
        return np.asarray(samples, dtype=np.float32).copy()
    frac = Fraction(dst_rate, src_rate).limit_denominator(64)
    up, down = frac.numerator, frac.denominator
    x = np.asarray(samples, dtype=np.float64)
    kern = _sinc_kernel(up, down)
    filtered = scipy.signal.upfirdn(kern, x, up=up, down=down)
    # trim the centered-kernel group delay
    delay = (len(kern) - 1) // 2
    out_len = int(np.ceil(len(x) * up / down))
    start = delay // down
    filtered = filtered[start:start + out_len]
    if len(filtered) < out_len:
        filtered = np.pad(filtered, (0, out_len - len(filtered)))
    return filtered.astype(np.float32)


def read_wav(path_or_bytes) -> Waveform:
    """Decode a WAV file or in-memory WAV bytes to a mono float waveform."""
    try:
        if isinstance(path_or_bytes, (bytes, bytearray)):
            rate, data = scipy.io.wavfile.read(_io.BytesIO(bytes(path_or_bytes)))
        else:
            rate, data = scipy.io.wavfile.read(str(path_or_bytes))
    except Exception as exc:
        raise AudioFormatError(f"cannot decode audio input: {exc}") from exc
    data = np.asarray(data)
    if data.size == 0:
        raise AudioDomainError("audio input is empty")
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max)
        data = data.astype(np.float32) / scale
    else:
        data = data.astype(np.float32)
    return Waveform(data, int(rate))


def write_wav(path, wav: Waveform) -> None:
    """Write 16-bit PCM."""
    clipped = np.clip(wav.samples, -1.0, 1.0)
    pcm = (clipped * 32767.0).astype(np.int16)
    scipy.io.wavfile.write(str(path), wav.sample_rate, pcm)


def wav_bytes(wav: Waveform) -> bytes:
    """16-bit PCM WAV as in-memory bytes (service responses)."""
    buf = _io.BytesIO()
    clipped = np.clip(wav.samples, -1.0, 1.0)
    pcm = (clipped * 32767.0).astype(np.int16)
    scipy.io.wavfile.write(buf, wav.sample_rate, pcm)
    return buf.getvalue()


def peak_normalize(samples: np.ndarray, peak: float = PEAK_NORM) -> np.ndarray:
    """Scale so max|x| == peak.  Silence is a fixed point."""
    samples = np.asarray(samples, dtype=np.float32)
    m = float(np.max(np.abs(samples))) if len(samples) else 0.0
    if m == 0.0:
        return samples.copy()
    return samples * (peak / m)


def load_normalize(path_or_bytes, target_sr: int) -> Waveform:
    """Decode, mix down, resample to ``target_sr``, peak-normalize to 0.95."""
    if target_sr not in SUPPORTED_RATES:
        raise AudioDomainError(f"target_sr must be one of {SUPPORTED_RATES}, got {target_sr}")
    wav = read_wav(path_or_bytes)
    samples = wav.samples
    if wav.sample_rate != target_sr:
        samples = resample(samples, wav.sample_rate, target_sr)
    return Waveform(peak_normalize(samples), target_sr)


def replicate_prompt(wav: Waveform, n: int) -> Waveform:
    """Concatenate the prompt with itself ``n`` times (style prompt replication)."""
    if n < 1:
        raise AudioDomainError(f"replication count must be >= 1, got {n}")
    return Waveform(np.tile(wav.samples, n), wav.sample_rate)
