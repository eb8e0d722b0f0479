"""Hierarchical speech synthesis toolkit.

Three cooperating models: a hierarchical-VAE speech synthesizer
(semantic features + F0 + voice prompt -> 16 kHz audio), a text-to-vec
front-end (phonemes + prosody prompt -> semantic features + F0), and a
16->48 kHz super-resolution generator.  Plus the deterministic DSP
front-end, training harness, inference pipelines, objective metrics,
an HTTP service, and a CLI.
"""

__version__ = "0.1.0"

from voicestack.audio.io import Waveform, load_normalize, read_wav, write_wav
from voicestack.audio.pitch import F0Contour, extract_f0
from voicestack.audio.spectrogram import Spectrogram, linear_spectrogram, mel_spectrogram

__all__ = [
    "Waveform",
    "F0Contour",
    "Spectrogram",
    "load_normalize",
    "read_wav",
    "write_wav",
    "extract_f0",
    "linear_spectrogram",
    "mel_spectrogram",
    "__version__",
]
