"""Monotonic alignment search.

Dynamic program over a [N_text x T_frames] log-likelihood matrix finding
the best alignment that is monotonic, assigns every frame to exactly one
token, and gives every token at least one frame.  No gradients flow
through the search; callers detach before handing the matrix over.
"""

from __future__ import annotations

import numpy as np


class AlignmentError(ValueError):
    pass


def mas_align(log_lik: np.ndarray) -> np.ndarray:
    """Returns a binary [N x T] alignment matrix maximizing the summed
    log-likelihood over monotonic surjective alignments."""
    log_lik = np.asarray(log_lik, dtype=np.float64)
    n, t = log_lik.shape
    if n > t:
        raise AlignmentError(f"{n} tokens cannot align onto {t} frames (need N <= T)")

    q = np.full((n, t), -np.inf)
    q[0, 0] = log_lik[0, 0]
    for j in range(1, t):
        if j <= t - n:  # row 0 is only feasible while n-1 rows still fit after it
            q[0, j] = q[0, j - 1] + log_lik[0, j]
        lo = max(1, n - (t - j))  # rows still reachable given remaining frames
        hi = min(j + 1, n)
        rows = np.arange(lo, hi)
        if len(rows):
            stay = q[rows, j - 1]
            advance = q[rows - 1, j - 1]
            q[rows, j] = np.maximum(stay, advance) + log_lik[rows, j]

    path = np.zeros((n, t), dtype=np.int8)
    i = n - 1
    for j in range(t - 1, -1, -1):
        path[i, j] = 1
        if j > 0 and (i == j or (i > 0 and q[i - 1, j - 1] >= q[i, j - 1])):
            i -= 1
    return path


def durations_from_alignment(path: np.ndarray) -> np.ndarray:
    """Per-token frame counts (row sums); they always sum to T."""
    return path.sum(axis=1).astype(np.int64)
