"""Frame-rate (50 Hz) continuous semantic features.

Two backends behind one call: ``external`` reads features precomputed
offline by any self-supervised speech model (middle-layer activations,
stored in the tensor container with a provenance record), ``surrogate``
is a deterministic frozen encoder computed in-repo so the whole system
runs without model downloads: log-mel -> fixed affine rescale -> frozen
random-orthogonal projection -> tanh.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from voicestack.audio.io import Waveform
from voicestack.audio.spectrogram import mel_spectrogram
from voicestack.tensorio import read_tensor, write_tensor

FRAME_RATE = 50
SURROGATE_DIM = 256
EXTERNAL_DIM = 1024
# fixed rescale keeping tanh in its active region (log-mel spans roughly [-11.5, 2])
MEL_SHIFT = -5.0
MEL_SCALE = 4.0


class FeatureFileError(IOError):
    """External feature file missing or incompatible with the audio."""


@dataclass
class SemanticFeatures:
    values: np.ndarray  # [frames, dim]
    frame_rate: int = FRAME_RATE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError("semantic features must be [frames, dim]")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("semantic features must be finite")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


class SurrogateSemanticEncoder:
    """Deterministic stand-in for an external SSL feature extractor.

    The projection is drawn once from ``seed`` (QR-orthogonalized
    Gaussian, so P^T P == I) and optionally persisted to ``cache_dir`` on
    first construction; later constructions load the persisted weights.
    """

    def __init__(self, dim: int = SURROGATE_DIM, seed: int = 1234,
                 cache_dir: str | Path | None = None):
        self.dim = dim
        self.seed = seed
        self.projection = None
        if cache_dir is not None:
            cache = Path(cache_dir) / f"surrogate_proj_d{dim}_s{seed}.tnsr"
            if cache.exists():
                self.projection, _ = read_tensor(cache)
        if self.projection is None:
            rng = np.random.default_rng(seed)
            raw = rng.normal(size=(dim, 80))
            q, _ = np.linalg.qr(raw)  # [dim, 80] with orthonormal columns
            self.projection = q.astype(np.float32)
            if cache_dir is not None:
                Path(cache_dir).mkdir(parents=True, exist_ok=True)
                write_tensor(cache, self.projection, {"dim": dim, "seed": seed})
        if self.projection.shape != (dim, 80):
            raise FeatureFileError(
                f"cached projection has shape {self.projection.shape}, expected {(dim, 80)}"
            )

    def __call__(self, wav: Waveform) -> SemanticFeatures:
        mel = mel_spectrogram(wav).values  # [frames, 80] log-mel
        scaled = (mel - MEL_SHIFT) / MEL_SCALE
        feats = np.tanh(scaled @ self.projection.T)
        return SemanticFeatures(feats.astype(np.float32))


def audio_hash(wav: Waveform) -> str:
    return hashlib.sha256(wav.samples.tobytes()).hexdigest()[:16]


def save_features(path, feats: SemanticFeatures, wav: Waveform | None = None,
                  layer_index: int = -1) -> None:
    meta = {
        "source_audio_hash": audio_hash(wav) if wav is not None else "",
        "layer_index": layer_index,
        "frame_rate": feats.frame_rate,
        "dim": feats.dim,
    }
    write_tensor(path, feats.values, meta)


def load_external_features(path, expected_frames: int | None = None,
                           expected_dim: int | None = None) -> SemanticFeatures:
    """Read a precomputed feature file, validating shape against the audio."""
    try:
        values, meta = read_tensor(path)
    except FileNotFoundError as exc:
        raise FeatureFileError(f"feature file not found: {path}") from exc
    if values.ndim != 2:
        raise FeatureFileError(f"{path}: expected 2-D features, found shape {values.shape}")
    if expected_dim is not None and values.shape[1] != expected_dim:
        raise FeatureFileError(
            f"{path}: feature dim mismatch (expected {expected_dim}, found {values.shape[1]})"
        )
    if expected_frames is not None and abs(values.shape[0] - expected_frames) > 1:
        raise FeatureFileError(
            f"{path}: frame count mismatch (expected {expected_frames} frames at 50 Hz, "
            f"found {values.shape[0]})"
        )
    if expected_frames is not None:
        values = values[:expected_frames]
    return SemanticFeatures(values, meta.get("frame_rate", FRAME_RATE))


def extract_semantic(wav: Waveform, backend: str = "surrogate",
                     encoder: SurrogateSemanticEncoder | None = None,
                     feature_path=None, expected_dim: int | None = None) -> SemanticFeatures:
    """Produce 50 Hz features for a 16 kHz waveform via the chosen backend."""
    if wav.sample_rate != 16000:
        raise ValueError(f"semantic extraction expects 16 kHz, got {wav.sample_rate}")
    if backend == "surrogate":
        enc = encoder or SurrogateSemanticEncoder()
        return enc(wav)
    if backend == "external":
        if feature_path is None:
            raise FeatureFileError("external backend requires feature_path")
        expected = len(wav.samples) // 320 + 1
        return load_external_features(feature_path, expected, expected_dim)
    raise ValueError(f"unknown semantic backend: {backend}")
