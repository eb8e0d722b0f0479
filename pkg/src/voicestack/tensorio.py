"""Binary tensor container used for feature caches and spectrogram dumps.

Layout (little-endian):

    magic   4 bytes  b"VSTN"
    version u32      container format version (currently 1)
    mlen    u32      UTF-8 JSON metadata length in bytes (0 = none)
    meta    mlen bytes
    ndim    u32
    shape   ndim * u64
    data    prod(shape) * f32, row-major

Only float32 payloads are supported; callers convert on the way in.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"VSTN"
VERSION = 1


class TensorFormatError(ValueError):
    """Raised when a container file is malformed or incompatible."""


def write_tensor(path, array, metadata: dict | None = None) -> None:
    """Write ``array`` as float32 with an optional JSON metadata record."""
    arr = np.ascontiguousarray(array, dtype=np.float32)
    meta = json.dumps(metadata).encode("utf-8") if metadata else b""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(meta)))
        f.write(meta)
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(arr.tobytes())


def read_tensor(path) -> tuple[np.ndarray, dict]:
    """Read a container file, returning ``(array, metadata)``."""
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise TensorFormatError(f"{path}: not a tensor container")
    version, mlen = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported container version {version}")
    off = 12
    meta = json.loads(blob[off:off + mlen].decode("utf-8")) if mlen else {}
    off += mlen
    (ndim,) = struct.unpack_from("<I", blob, off)
    off += 4
    shape = struct.unpack_from(f"<{ndim}Q", blob, off)
    off += 8 * ndim
    count = int(np.prod(shape)) if ndim else 1
    expected = off + 4 * count
    if len(blob) != expected:
        raise TensorFormatError(
            f"{path}: payload size mismatch (expected {expected} bytes, found {len(blob)})"
        )
    data = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
    return data.reshape(shape).copy(), meta
