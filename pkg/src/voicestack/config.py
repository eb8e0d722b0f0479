"""Model and training configuration.

Dataclasses with INI round-trip (sections = config kind), a stable hash
over architecture-relevant fields (checkpoints refuse to resume across
mismatching hashes), and two shipped presets: ``paper`` (full-scale
sizes) and ``desk`` (hidden sizes quartered, small batch) which is what
the bundled smoke-training runs use.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields

CONFIG_VERSION = 1

SAMPLE_RATE = 16000
HOP = 320
F0_HOP = 80
SR_RATE = 48000


def _parse_value(text: str, like):
    if isinstance(like, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    if isinstance(like, tuple):
        items = [t for t in text.replace(",", " ").split() if t]
        elem = like[0] if like else 0
        return tuple(type(elem)(float(i)) if isinstance(elem, float) else type(elem)(i)
                     for i in items)
    return text


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


class _IniMixin:
    @classmethod
    def from_section(cls, section):
        defaults = cls()
        kwargs = {}
        for f in fields(cls):
            if f.name in section:
                kwargs[f.name] = _parse_value(section[f.name], getattr(defaults, f.name))
        return cls(**kwargs)

    def to_section(self):
        return {f.name: _format_value(getattr(self, f.name)) for f in fields(self)}

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SynthesizerConfig(_IniMixin):
    semantic_dim: int = 256
    latent_dim: int = 192
    hidden: int = 192
    style_dim: int = 256
    style_hidden: int = 128
    wav_enc_channels: tuple = (16, 32, 64, 128, 192)
    wav_enc_rates: tuple = (8, 5, 4, 2)
    wav_enc_kernels: tuple = (17, 10, 8, 4)
    spec_enc_layers: int = 16
    sf_layers: int = 8
    wn_kernel: int = 5
    flow_layers: int = 4
    flow_blocks: int = 3
    flow_filter: int = 768
    flow_heads: int = 2
    flow_kernel: int = 5
    flow_dropout: float = 0.1
    source_channels: int = 256
    source_rates: tuple = (2, 2)
    waveform_channels: int = 512
    waveform_rates: tuple = (4, 5, 4, 2, 2)
    amp_kernels: tuple = (3, 7, 11)
    amp_dilations: tuple = (1, 3, 5)
    p_h_dim: int = 64
    prosody_bins: int = 20
    prosody_layers: int = 4
    mpd_channels: tuple = (32, 128, 256, 512)
    stftd_channels: tuple = (32, 64, 128, 128)

    def __post_init__(self):
        down = 1
        for r in self.wav_enc_rates:
            down *= r
        up = 1
        for r in self.waveform_rates:
            up *= r
        if down != HOP or up != HOP:
            raise ValueError(
                f"rate chain broken: wav-encoder product {down} and generator "
                f"product {up} must both equal the hop ({HOP})"
            )
        src = 1
        for r in self.source_rates:
            src *= r
        if src != HOP // F0_HOP:
            raise ValueError(
                f"source generator product {src} must map 50 Hz to the F0 rate "
                f"({HOP // F0_HOP}x)"
            )


@dataclass
class TTVConfig(_IniMixin):
    vocab_size: int = 64
    semantic_dim: int = 256
    latent_dim: int = 256
    text_hidden: int = 256
    text_filter: int = 1024
    text_heads: int = 2
    text_kernel: int = 9
    text_dropout: float = 0.2
    text_blocks_plain: int = 3
    text_blocks_conditional: int = 3
    content_enc_hidden: int = 256
    content_enc_layers: int = 16
    content_dec_hidden: int = 512
    content_dec_layers: int = 8
    wn_kernel: int = 5
    flow_hidden: int = 256
    flow_filter: int = 1024
    flow_heads: int = 4
    flow_layers: int = 4
    flow_blocks: int = 3
    flow_kernel: int = 5
    flow_dropout: float = 0.1
    style_dim: int = 256
    style_hidden: int = 128
    source_channels: int = 256
    source_rates: tuple = (2, 2)
    duration_hidden: int = 256
    ctc_hidden: int = 256


@dataclass
class SpeechSRConfig(_IniMixin):
    channels: int = 32
    amp_kernel: int = 3
    amp_dilations: tuple = (1, 3, 5)
    rate: int = 3
    mpd_channels: tuple = (32, 128, 256, 512)
    stftd_channels: tuple = (32, 64, 128, 128)
    stftd_windows: tuple = (4096, 2048, 1024, 512, 256, 128)
    dwtd_levels: int = 2
    dwtd_channels: tuple = (32, 64, 128, 256)
    mel_bins: int = 128
    mel_n_fft: int = 2048
    mel_hop: int = 480


@dataclass
class TrainConfig(_IniMixin):
    lr: float = 1e-4
    beta1: float = 0.8
    beta2: float = 0.99
    weight_decay: float = 0.01
    lr_decay: float = 0.999 ** (1.0 / 8.0)
    batch: int = 4
    steps: int = 2000
    slice_samples: int = 61440
    generator_window_samples: int = 9600
    lambda_bi: float = 0.5
    null_style_p: float = 0.1
    seed: int = 1234
    weight_recon: float = 45.0
    weight_pitch: float = 1.0
    weight_kl: float = 1.0
    weight_prosody: float = 1.0
    weight_adv: float = 1.0
    weight_fm: float = 2.0
    fm_enabled: bool = True
    weight_dur: float = 1.0
    weight_ctc: float = 1.0
    weight_f0: float = 1.0
    perturb_variants: int = 2
    log_every: int = 10
    checkpoint_every: int = 500

    def __post_init__(self):
        if self.slice_samples % HOP:
            raise ValueError(f"slice_samples must be a multiple of {HOP}")
        if self.generator_window_samples % HOP:
            raise ValueError(f"generator_window_samples must be a multiple of {HOP}")


def paper_synth_config() -> SynthesizerConfig:
    return SynthesizerConfig()


def desk_synth_config() -> SynthesizerConfig:
    return SynthesizerConfig(
        latent_dim=48, hidden=48, style_dim=64, style_hidden=48,
        wav_enc_channels=(4, 8, 16, 32, 48),
        spec_enc_layers=8, sf_layers=4,
        flow_blocks=2, flow_filter=96, flow_heads=2, flow_kernel=3,
        source_channels=64, waveform_channels=128,
        amp_kernels=(3,), amp_dilations=(1, 3),
        p_h_dim=16, prosody_layers=2,
        mpd_channels=(8, 32, 64, 96), stftd_channels=(8, 16, 24, 24),
    )


def paper_ttv_config() -> TTVConfig:
    return TTVConfig()


def desk_ttv_config() -> TTVConfig:
    return TTVConfig(
        latent_dim=64, text_hidden=64, text_filter=256,
        content_enc_hidden=64, content_enc_layers=8,
        content_dec_hidden=128, content_dec_layers=4,
        flow_hidden=64, flow_filter=256, flow_heads=2, flow_blocks=2,
        style_dim=64, style_hidden=48,
        source_channels=64, duration_hidden=64, ctc_hidden=64,
    )


def paper_sr_config() -> SpeechSRConfig:
    return SpeechSRConfig()


def desk_sr_config() -> SpeechSRConfig:
    return SpeechSRConfig(
        channels=16,
        mpd_channels=(8, 32, 64, 128), stftd_channels=(8, 16, 32, 32),
        dwtd_channels=(8, 16, 32, 64),
    )


def desk_train_config(**overrides) -> TrainConfig:
    base = dict(batch=4, steps=2000, lr=2e-4, slice_samples=30720,
                generator_window_samples=6400)
    base.update(overrides)
    return TrainConfig(**base)


_SECTIONS = {
    "synthesizer": SynthesizerConfig,
    "ttv": TTVConfig,
    "speechsr": SpeechSRConfig,
    "train.synth": TrainConfig,
    "train.ttv": TrainConfig,
    "train.sr": TrainConfig,
}

PRESETS = {
    "desk": {
        "synthesizer": desk_synth_config,
        "ttv": desk_ttv_config,
        "speechsr": desk_sr_config,
        "train.synth": lambda: desk_train_config(),
        "train.ttv": lambda: desk_train_config(lr=2e-4, lr_decay=0.999),
        "train.sr": lambda: desk_train_config(steps=1000),
    },
    "paper": {
        "synthesizer": paper_synth_config,
        "ttv": paper_ttv_config,
        "speechsr": paper_sr_config,
        "train.synth": lambda: TrainConfig(lr=1e-4, batch=80, steps=1_200_000),
        "train.ttv": lambda: TrainConfig(lr=2e-4, lr_decay=0.999, batch=128,
                                         steps=950_000),
        "train.sr": lambda: TrainConfig(lr=1e-4, batch=128, steps=100_000),
    },
}


def load_config_file(path) -> dict:
    """Parse an INI config file into {section: dataclass}; unknown keys error."""
    parser = configparser.ConfigParser()
    with open(path) as f:
        parser.read_file(f)
    if parser.has_section("meta"):
        version = parser.getint("meta", "version", fallback=CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version}")
    out = {}
    for name, cls in _SECTIONS.items():
        if parser.has_section(name):
            known = {f.name for f in fields(cls)}
            unknown = set(parser[name]) - known
            if unknown:
                raise ValueError(f"unknown keys in [{name}]: {sorted(unknown)}")
            out[name] = cls.from_section(parser[name])
    return out


def save_config_file(path, sections: dict) -> None:
    parser = configparser.ConfigParser()
    parser["meta"] = {"version": str(CONFIG_VERSION)}
    for name, cfg in sections.items():
        parser[name] = cfg.to_section()
    buf = io.StringIO()
    parser.write(buf)
    with open(path, "w") as f:
        f.write(buf.getvalue())


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return {section: factory() for section, factory in PRESETS[name].items()}
