"""Linear and mel spectrograms.

Both transforms share one framing convention: n_fft 1280, Hann window,
hop 320, center padding, so a length-L signal yields L//320 + 1 frames.
The torch path is the single source of truth; the numpy-facing functions
wrap it, and training losses reuse the module directly so the loss mel
and the analysis mel can never drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch

from voicestack.audio.io import AudioDomainError, Waveform

N_FFT = 1280
HOP = 320
N_MELS = 80
LOG_FLOOR = 1e-5

# 48 kHz analysis used by the super-resolution mel loss (100 Hz frame rate)
N_FFT_48K = 2048
HOP_48K = 480
N_MELS_48K = 128


@dataclass
class Spectrogram:
    """values: [frames x bins]; linear kind holds magnitudes (>= 0),
    mel kind holds log-magnitudes (floored at log(1e-5))."""

    values: np.ndarray
    hop: int
    n_fft: int
    kind: str

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]


def frames_for(num_samples: int, hop: int = HOP) -> int:
    """Frame count under center-padded framing."""
    return num_samples // hop + 1


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int, fmin: float = 0.0,
                   fmax: float | None = None) -> np.ndarray:
    """Triangular mel filterbank [n_mels x (n_fft//2 + 1)], peak-one triangles."""
    if fmax is None:
        fmax = sample_rate / 2.0
    n_bins = n_fft // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (fft_freqs - lo) / max(mid - lo, 1e-10)
        down = (hi - fft_freqs) / max(hi - mid, 1e-10)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb.astype(np.float32)


class SpectrogramTransform(torch.nn.Module):
    """Differentiable magnitude STFT and log-mel; buffers keep it on-device."""

    def __init__(self, sample_rate: int = 16000, n_fft: int = N_FFT, hop: int = HOP,
                 n_mels: int = N_MELS, fmin: float = 0.0, fmax: float | None = None):
        super().__init__()
        self.sample_rate = sample_rate
        self.n_fft = n_fft
        self.hop = hop
        self.n_mels = n_mels
        self.register_buffer("window", torch.hann_window(n_fft), persistent=False)
        fb = mel_filterbank(sample_rate, n_fft, n_mels, fmin, fmax)
        self.register_buffer("mel_fb", torch.from_numpy(fb), persistent=False)

    def magnitude(self, x: torch.Tensor) -> torch.Tensor:
        """x: [B, T] -> [B, n_fft//2+1, frames] magnitude STFT."""
        if x.dim() == 1:
            x = x.unsqueeze(0)
        if x.shape[-1] < self.n_fft:
            raise AudioDomainError(
                f"input of {x.shape[-1]} samples is shorter than one window ({self.n_fft})"
            )
        spec = torch.stft(x, self.n_fft, hop_length=self.hop, win_length=self.n_fft,
                          window=self.window, center=True, pad_mode="reflect",
                          return_complex=True)
        return spec.abs()

    def mel(self, x: torch.Tensor) -> torch.Tensor:
        """x: [B, T] -> [B, n_mels, frames] log-mel with clamp floor."""
        mag = self.magnitude(x)
        melspec = torch.matmul(self.mel_fb, mag)
        return torch.log(torch.clamp(melspec, min=LOG_FLOOR))

    forward = mel


@lru_cache(maxsize=4)
def _transform_for(sample_rate: int) -> SpectrogramTransform:
    if sample_rate == 48000:
        return SpectrogramTransform(48000, N_FFT_48K, HOP_48K, N_MELS_48K)
    return SpectrogramTransform(sample_rate, N_FFT, HOP, N_MELS)


def linear_spectrogram(wav: Waveform) -> Spectrogram:
    """Magnitude STFT at hop 320 (16 kHz input only)."""
    if wav.sample_rate != 16000:
        raise AudioDomainError(f"linear_spectrogram expects 16 kHz, got {wav.sample_rate}")
    t = _transform_for(16000)
    with torch.no_grad():
        mag = t.magnitude(torch.from_numpy(wav.samples))
    return Spectrogram(mag[0].T.numpy(), t.hop, t.n_fft, "linear")


def mel_spectrogram(wav: Waveform) -> Spectrogram:
    """Log-mel at the rate-appropriate analysis setting (80 bins at 16 kHz,
    128 bins at 48 kHz)."""
    if wav.sample_rate not in (16000, 48000):
        raise AudioDomainError(f"mel_spectrogram expects 16/48 kHz, got {wav.sample_rate}")
    t = _transform_for(wav.sample_rate)
    with torch.no_grad():
        mel = t.mel(torch.from_numpy(wav.samples))
    return Spectrogram(mel[0].T.numpy(), t.hop, t.n_fft, "mel")
