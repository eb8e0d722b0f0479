"""Fundamental-frequency tracking.

Normalized cross-correlation (NCCF) candidate generation followed by a
dynamic-programming track selection with octave and voicing-transition
penalties, at a hop of 80 samples (200 Hz frame rate at 16 kHz input).
Search range 60-400 Hz, NCCF voicing threshold 0.3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voicestack.audio.io import AudioDomainError, Waveform

HOP = 80
F0_MIN = 60.0
F0_MAX = 400.0
NCCF_WINDOW = 400          # 25 ms correlation window
VOICING_THRESHOLD = 0.3
MAX_CANDIDATES = 8
LAG_BIAS = 0.15            # favors shorter lags among near-equal peaks
OCTAVE_COST = 0.35         # per-octave jump between consecutive voiced frames
VOICING_COST = 0.2         # voiced <-> unvoiced switch


@dataclass
class F0Contour:
    """Per-frame F0 in Hz; hz[i] > 0 exactly on voiced frames."""

    hz: np.ndarray
    voiced: np.ndarray
    hop: int = HOP

    def __post_init__(self):
        self.hz = np.asarray(self.hz, dtype=np.float32)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if len(self.hz) != len(self.voiced):
            raise AudioDomainError("hz and voiced must have equal length")

    @property
    def frames(self) -> int:
        return len(self.hz)


def _nccf_matrix(samples: np.ndarray, sr: int):
    """NCCF over all (frame, lag) pairs.

    Returns (nccf [n_frames x n_lags], min_lag).  Frames start at i*HOP;
    the signal is zero-padded on the right so every frame has a full
    window plus the maximum lag available.
    """
    min_lag = int(round(sr / F0_MAX))
    max_lag = int(round(sr / F0_MIN))
    n_frames = len(samples) // HOP + 1
    span = NCCF_WINDOW + max_lag
    padded = np.zeros(n_frames * HOP + span, dtype=np.float64)
    padded[: len(samples)] = samples
    idx = np.arange(n_frames)[:, None] * HOP + np.arange(span)[None, :]
    frames = padded[idx]  # [n_frames, span]

    base = frames[:, :NCCF_WINDOW]
    e0 = np.sum(base * base, axis=1)
    # all-lag cross-correlation via FFT: c[k] = sum_j base[j] * frame[j+k]
    nfft = 1 << int(np.ceil(np.log2(span + NCCF_WINDOW)))
    corr = np.fft.irfft(
        np.conj(np.fft.rfft(base, nfft)) * np.fft.rfft(frames, nfft), nfft
    )[:, min_lag: max_lag + 1]
    # windowed energies from a running sum of squares
    csum = np.cumsum(frames * frames, axis=1)
    csum = np.concatenate([np.zeros((n_frames, 1)), csum], axis=1)
    lags = np.arange(min_lag, max_lag + 1)
    e_lag = csum[:, lags + NCCF_WINDOW] - csum[:, lags]
    denom = np.sqrt(np.maximum(e0[:, None] * e_lag, 1e-20))
    nccf = corr / denom
    nccf[denom[:, 0] < 1e-12, :] = 0.0
    return np.clip(nccf, -1.0, 1.0), min_lag


def _peak_candidates(row: np.ndarray, min_lag: int):
    """Local maxima of one frame's NCCF, best-first, with parabolic lag refinement."""
    interior = (row[1:-1] >= row[:-2]) & (row[1:-1] > row[2:])
    peaks = np.where(interior)[0] + 1
    if len(peaks) == 0:
        peaks = np.array([int(np.argmax(row))])
    order = np.argsort(row[peaks])[::-1][:MAX_CANDIDATES]
    peaks = peaks[order]
    lags, scores = [], []
    for p in peaks:
        lag = float(p + min_lag)
        if 0 < p < len(row) - 1:
            denom = row[p - 1] - 2 * row[p] + row[p + 1]
            if abs(denom) > 1e-12:
                lag += 0.5 * (row[p - 1] - row[p + 1]) / denom
        lags.append(lag)
        scores.append(float(row[p]))
    return np.array(lags), np.array(scores)


def _select_track(cand_lags, cand_scores, sr: int, n_lags: int, min_lag: int):
    """Viterbi over per-frame candidates plus one unvoiced state per frame."""
    n_frames = len(cand_lags)
    states = []  # per frame: (lags array incl. NaN for unvoiced, local score)
    for lags, scores in zip(cand_lags, cand_scores):
        local = scores - LAG_BIAS * (lags - min_lag) / n_lags
        states.append((np.append(lags, np.nan), np.append(local, VOICING_THRESHOLD)))

    prev_cost = states[0][1].copy()
    back = []
    for t in range(1, n_frames):
        lags_prev = states[t - 1][0]
        lags_cur, local = states[t]
        trans = np.zeros((len(lags_prev), len(lags_cur)))
        pv = ~np.isnan(lags_prev)
        cv = ~np.isnan(lags_cur)
        both = pv[:, None] & cv[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            jump = np.abs(np.log2(lags_prev[:, None] / lags_cur[None, :]))
        trans[both] = OCTAVE_COST * jump[both]
        trans[pv[:, None] ^ cv[None, :]] = VOICING_COST
        total = prev_cost[:, None] - trans
        choice = np.argmax(total, axis=0)
        prev_cost = total[choice, np.arange(len(lags_cur))] + local
        back.append(choice)

    path = np.empty(n_frames, dtype=int)
    path[-1] = int(np.argmax(prev_cost))
    for t in range(n_frames - 2, -1, -1):
        path[t] = back[t][path[t + 1]]

    hz = np.zeros(n_frames, dtype=np.float32)
    voiced = np.zeros(n_frames, dtype=bool)
    for t in range(n_frames):
        lag = states[t][0][path[t]]
        if not np.isnan(lag):
            hz[t] = sr / lag
            voiced[t] = True
    return hz, voiced


def extract_f0(wav: Waveform) -> F0Contour:
    """Track F0 at hop 80.  Fully unvoiced output is legal (e.g. noise)."""
    if wav.sample_rate != 16000:
        raise AudioDomainError(f"extract_f0 expects 16 kHz, got {wav.sample_rate}")
    nccf, min_lag = _nccf_matrix(wav.samples.astype(np.float64), wav.sample_rate)
    cand_lags, cand_scores = [], []
    for row in nccf:
        lags, scores = _peak_candidates(row, min_lag)
        cand_lags.append(lags)
        cand_scores.append(scores)
    hz, voiced = _select_track(cand_lags, cand_scores, wav.sample_rate,
                               nccf.shape[1], min_lag)
    hz[~voiced] = 0.0
    return F0Contour(hz, voiced, HOP)


def periodicity_contour(wav: Waveform) -> np.ndarray:
    """Per-frame peak NCCF in [0, 1]; the periodicity curve used by metrics."""
    if wav.sample_rate != 16000:
        raise AudioDomainError(f"periodicity expects 16 kHz, got {wav.sample_rate}")
    nccf, _ = _nccf_matrix(wav.samples.astype(np.float64), wav.sample_rate)
    return np.clip(nccf.max(axis=1), 0.0, 1.0).astype(np.float32)
