"""Versioned checkpoint container.

One file per checkpoint holding named module state dicts, optimizer and
scheduler states, the config snapshot plus its hash (resume refuses to
cross architecture changes), every RNG stream, and free-form extras
(tokenizer table, surrogate seed, training history tail).
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import torch

from voicestack import utils

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path, kind: str, modules: dict, config, train_config,
                    step: int, optimizers: dict | None = None,
                    schedulers: dict | None = None, data_rng_state=None,
                    extra: dict | None = None) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "step": step,
        "config": asdict(config),
        "config_hash": config.hash(),
        "train_config": asdict(train_config),
        "state": {name: m.state_dict() for name, m in modules.items()},
        "optim": {name: o.state_dict() for name, o in (optimizers or {}).items()},
        "sched": {name: s.state_dict() for name, s in (schedulers or {}).items()},
        "rng": utils.rng_state(),
        "data_rng": data_rng_state,
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path, expected_kind: str | None = None,
                    expected_config=None) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {payload.get('format_version')}")
    if expected_kind and payload.get("kind") != expected_kind:
        raise CheckpointError(
            f"{path}: checkpoint kind {payload.get('kind')!r} != {expected_kind!r}")
    if expected_config is not None and payload["config_hash"] != expected_config.hash():
        raise CheckpointError(
            f"{path}: architecture config hash mismatch "
            f"({payload['config_hash']} != {expected_config.hash()}); "
            "refusing to resume across incompatible configs")
    return payload
