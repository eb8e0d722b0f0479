from voicestack.audio.io import Waveform, load_normalize, read_wav, replicate_prompt, resample, write_wav
from voicestack.audio.spectrogram import Spectrogram, linear_spectrogram, mel_spectrogram
from voicestack.audio.pitch import F0Contour, extract_f0, periodicity_contour
from voicestack.audio.dwt import haar_dwt, haar_idwt
from voicestack.audio.perturb import PerturbConfig, perturb

__all__ = [
    "Waveform",
    "Spectrogram",
    "F0Contour",
    "PerturbConfig",
    "load_normalize",
    "read_wav",
    "write_wav",
    "resample",
    "replicate_prompt",
    "linear_spectrogram",
    "mel_spectrogram",
    "extract_f0",
    "periodicity_contour",
    "haar_dwt",
    "haar_idwt",
    "perturb",
]
