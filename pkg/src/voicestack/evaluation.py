"""Objective metrics.

All metrics are zero on identical inputs.  mel_distance, f0_consistency
and lsd are symmetric; pitch_metrics treats its first argument as the
reference for the V/UV F1.  Results can be emitted as JSON-lines records
{file_a, file_b, metric, value} for external aggregation.
"""

from __future__ import annotations

import json

import numpy as np

from voicestack.audio.io import AudioDomainError, Waveform
from voicestack.audio.pitch import extract_f0, periodicity_contour
from voicestack.audio.spectrogram import mel_spectrogram

LSD_BAND_BOUNDARY_HZ = 8000.0  # 16 kHz-source Nyquist; the HF/LF split


class MetricError(ValueError):
    pass


def _trim_pair(a: Waveform, b: Waveform):
    if a.sample_rate != b.sample_rate:
        raise MetricError(
            f"sample-rate mismatch: {a.sample_rate} vs {b.sample_rate}")
    n = min(len(a.samples), len(b.samples))
    return (Waveform(a.samples[:n], a.sample_rate),
            Waveform(b.samples[:n], b.sample_rate))


def mel_distance(a: Waveform, b: Waveform) -> float:
    """Mean L1 between log-mel spectrograms (lengths trimmed to the shorter)."""
    a, b = _trim_pair(a, b)
    ma = mel_spectrogram(a).values
    mb = mel_spectrogram(b).values
    n = min(ma.shape[0], mb.shape[0])
    return float(np.abs(ma[:n] - mb[:n]).mean())


def pitch_metrics(a: Waveform, b: Waveform) -> dict:
    """Pitch RMSE (Hz, mutually voiced frames), periodicity L2 distance,
    and voiced/unvoiced F1 with ``a`` as the reference."""
    a, b = _trim_pair(a, b)
    if a.sample_rate != 16000:
        raise MetricError("pitch metrics expect 16 kHz audio")
    fa, fb = extract_f0(a), extract_f0(b)
    n = min(fa.frames, fb.frames)
    va, vb = fa.voiced[:n], fb.voiced[:n]
    both = va & vb
    if not both.any():
        raise MetricError("no mutually voiced frames; pitch RMSE undefined")
    rmse = float(np.sqrt(np.mean((fa.hz[:n][both] - fb.hz[:n][both]) ** 2)))

    pa, pb = periodicity_contour(a)[:n], periodicity_contour(b)[:n]
    periodicity = float(np.sqrt(np.mean((pa - pb) ** 2)))

    tp = float(np.sum(va & vb))
    fp = float(np.sum(~va & vb))
    fn = float(np.sum(va & ~vb))
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    return {"pitch_rmse": rmse, "periodicity_dist": periodicity, "vuv_f1": f1}


def f0_consistency(pred_log_f0: np.ndarray, gt_log_f0: np.ndarray,
                   voiced: np.ndarray | None = None) -> float:
    """Mean L1 in the log-F0 domain over voiced frames."""
    pred = np.asarray(pred_log_f0, dtype=np.float64)
    gt = np.asarray(gt_log_f0, dtype=np.float64)
    n = min(len(pred), len(gt))
    pred, gt = pred[:n], gt[:n]
    if voiced is not None:
        mask = np.asarray(voiced[:n], dtype=bool)
        if not mask.any():
            return 0.0
        pred, gt = pred[mask], gt[mask]
    return float(np.abs(pred - gt).mean())


def _power_spectra(wav: Waveform, n_fft: int = 2048, hop: int = 512):
    x = wav.samples.astype(np.float64)
    win = np.hanning(n_fft)
    n_frames = max(1, (len(x) - n_fft) // hop + 1)
    idx = np.arange(n_frames)[:, None] * hop + np.arange(n_fft)[None, :]
    frames = x[np.minimum(idx, len(x) - 1)] * win
    spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return np.maximum(spec, 1e-10)


def lsd(a: Waveform, b: Waveform) -> dict:
    """Log-spectral distance at 48 kHz: RMS over bins of the log10 power
    difference, averaged over frames; plus the split below/above 8 kHz."""
    if a.sample_rate != 48000 or b.sample_rate != 48000:
        raise MetricError("lsd expects 48 kHz audio on both sides")
    if abs(len(a.samples) - len(b.samples)) > 0.1 * max(len(a.samples), len(b.samples)):
        raise MetricError("length mismatch beyond trim tolerance")
    a, b = _trim_pair(a, b)
    sa, sb = _power_spectra(a), _power_spectra(b)
    n = min(sa.shape[0], sb.shape[0])
    diff = np.log10(sa[:n]) - np.log10(sb[:n])
    freqs = np.fft.rfftfreq(2048, 1.0 / 48000)
    hf = freqs >= LSD_BAND_BOUNDARY_HZ
    out = {
        "lsd": float(np.mean(np.sqrt(np.mean(diff ** 2, axis=1)))),
        "lsd_hf": float(np.mean(np.sqrt(np.mean(diff[:, hf] ** 2, axis=1)))),
        "lsd_lf": float(np.mean(np.sqrt(np.mean(diff[:, ~hf] ** 2, axis=1)))),
    }
    return out


def evaluate_pair(a: Waveform, b: Waveform, metrics=("mel", "pitch", "lsd")) -> dict:
    """Run every metric that applies at the pair's sample rate."""
    out = {}
    if "mel" in metrics and a.sample_rate in (16000, 48000):
        out["mel_distance"] = mel_distance(a, b)
    if "pitch" in metrics and a.sample_rate == 16000:
        try:
            out.update(pitch_metrics(a, b))
        except MetricError:
            pass
    if "lsd" in metrics and a.sample_rate == 48000:
        out.update(lsd(a, b))
    return out


def jsonl_records(file_a: str, file_b: str, values: dict) -> list[str]:
    return [json.dumps({"file_a": file_a, "file_b": file_b,
                        "metric": name, "value": value})
            for name, value in values.items()]
