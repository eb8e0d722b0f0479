"""Diagonal-Gaussian latents: reparameterized sampling and closed-form KL."""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass
class GaussianLatent:
    """mean/log-variance plus the sample drawn from them; eps is recorded so
    sample == mean + exp(0.5 * log_var) * eps holds by construction."""

    mean: torch.Tensor
    log_var: torch.Tensor
    sample: torch.Tensor
    eps: torch.Tensor


DETERMINISTIC_TEMPERATURE = 1e-6


def rsample(mean: torch.Tensor, log_var: torch.Tensor,
            eps: torch.Tensor | None = None, temperature: float = 1.0) -> GaussianLatent:
    """Reparameterized sample.  Temperatures at or below the deterministic
    threshold short-circuit to the mean (the T -> 0 limit) without touching
    the RNG stream."""
    if eps is None:
        if temperature <= DETERMINISTIC_TEMPERATURE:
            eps = torch.zeros_like(mean)
        else:
            eps = torch.randn_like(mean)
    sample = mean + torch.exp(0.5 * log_var) * eps * temperature
    return GaussianLatent(mean, log_var, sample, eps)


def gaussian_kl(mean_q: torch.Tensor, log_var_q: torch.Tensor,
                mean_p: torch.Tensor, log_var_p: torch.Tensor,
                mask: torch.Tensor | None = None) -> torch.Tensor:
    """KL(q || p) per element, averaged over batch, channels, and time.

    ``mask`` ([B, 1, T], 1 = valid) restricts the average to valid frames.
    """
    kl = 0.5 * (
        log_var_p - log_var_q
        + (torch.exp(log_var_q) + (mean_q - mean_p) ** 2) * torch.exp(-log_var_p)
        - 1.0
    )
    if mask is None:
        return kl.mean()
    return (kl * mask).sum() / (mask.sum() * kl.shape[1])
