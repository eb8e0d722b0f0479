"""CTC negative log-likelihood (forward algorithm, log space).

Targets never contain the blank; the blank-augmented state sequence is
built internally.  Differentiable through torch autograd; batch items
are padded with their own lengths.
"""

from __future__ import annotations

import torch

NEG_INF = float("-inf")


class CTCError(ValueError):
    pass


def ctc_loss(log_probs: torch.Tensor, targets: torch.Tensor,
             input_lengths=None, target_lengths=None,
             blank: int = 0) -> torch.Tensor:
    """Mean per-sequence NLL.

    log_probs: [B, T, V] log-softmax over vocab (blank included)
    targets:   [B, L] padded target ids (no blanks)
    """
    b, t_max, _ = log_probs.shape
    if input_lengths is None:
        input_lengths = torch.full((b,), t_max, dtype=torch.long)
    if target_lengths is None:
        target_lengths = torch.full((b,), targets.shape[1], dtype=torch.long)

    losses = []
    for i in range(b):
        t = int(input_lengths[i])
        tgt = targets[i, : int(target_lengths[i])]
        if len(tgt) > t:
            raise CTCError(
                f"target of length {len(tgt)} longer than {t} input frames")
        # blank-augmented states: [blank, t1, blank, t2, ..., tn, blank]
        s = 2 * len(tgt) + 1
        labels = torch.full((s,), blank, dtype=torch.long, device=targets.device)
        labels[1::2] = tgt
        lp = log_probs[i, :t, :]

        alpha = lp.new_full((s,), NEG_INF)
        alpha[0] = lp[0, blank]
        if s > 1:
            alpha[1] = lp[0, labels[1]]
        # skip transition allowed where the label differs from two states back
        can_skip = torch.zeros(s, dtype=torch.bool, device=targets.device)
        if s > 2:
            can_skip[2:] = (labels[2:] != blank) & (labels[2:] != labels[:-2])
        for step in range(1, t):
            prev = alpha
            stay = prev
            move = torch.cat([prev.new_full((1,), NEG_INF), prev[:-1]])
            skip = torch.cat([prev.new_full((2,), NEG_INF), prev[:-2]])
            skip = torch.where(can_skip, skip, torch.full_like(skip, NEG_INF))
            alpha = torch.logsumexp(torch.stack([stay, move, skip]), dim=0)
            alpha = alpha + lp[step, labels]
        tail = alpha[-1] if s == 1 else torch.logsumexp(alpha[-2:], dim=0)
        losses.append(-tail)
    return torch.stack(losses).mean()
