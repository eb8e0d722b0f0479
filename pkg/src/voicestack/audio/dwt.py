"""Orthonormal Haar wavelet-packet analysis.

Every band is split at every level, so ``levels`` levels turn a signal
into 2**levels equal-width sub-band signals (band 0 carries the lowest
quarter/half/... of the spectrum).  The arithmetic is plain slicing, so
the same functions accept numpy arrays and torch tensors; the sub-band
discriminator reuses them directly.
"""

from __future__ import annotations

import math

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class DwtDomainError(ValueError):
    pass


def _split(x):
    even = x[..., 0::2]
    odd = x[..., 1::2]
    return (even + odd) * _INV_SQRT2, (even - odd) * _INV_SQRT2


def _merge(approx, detail):
    even = (approx + detail) * _INV_SQRT2
    odd = (approx - detail) * _INV_SQRT2
    if hasattr(approx, "numpy") or type(approx).__module__.startswith("torch"):
        import torch

        return torch.stack((even, odd), dim=-1).flatten(-2)
    import numpy as np

    return np.stack((even, odd), axis=-1).reshape(*even.shape[:-1], -1)


def haar_dwt(x, levels: int):
    """Decompose along the last axis into 2**levels bands.

    Length must be divisible by 2**levels; shorter inputs are zero-padded
    and the original length is recoverable via ``haar_idwt(..., length=)``.
    """
    if levels < 1:
        raise DwtDomainError(f"levels must be >= 1, got {levels}")
    block = 2 ** levels
    n = x.shape[-1]
    if n % block:
        pad = block - n % block
        if type(x).__module__.startswith("torch"):
            import torch

            x = torch.nn.functional.pad(x, (0, pad))
        else:
            import numpy as np

            width = [(0, 0)] * (x.ndim - 1) + [(0, pad)]
            x = np.pad(x, width)
    bands = [x]
    for _ in range(levels):
        nxt = []
        for b in bands:
            a, d = _split(b)
            nxt.extend((a, d))
        bands = nxt
    return bands


def haar_idwt(bands, length: int | None = None):
    """Inverse packet transform; ``length`` trims any analysis padding."""
    bands = list(bands)
    while len(bands) > 1:
        bands = [_merge(bands[i], bands[i + 1]) for i in range(0, len(bands), 2)]
    out = bands[0]
    if length is not None:
        out = out[..., :length]
    return out
