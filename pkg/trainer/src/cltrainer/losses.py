"""Torch implementations of the training losses.

Same definitions the evaluator's ``losses-check`` oracle uses: squared
confidence error normalized separately over key-point and empty cells,
masked squared offset/depth errors over key-point cells, empty sums give
zero.  All reductions are per sample, then averaged over the batch.
"""

from __future__ import annotations

import torch


def conf_loss(f: torch.Tensor, f_hat: torch.Tensor) -> torch.Tensor:
    """f: (B, h1, w1) binary targets; f_hat: (B, h1, w1) predictions."""
    pos = f > 0.5
    n_e = pos.flatten(1).sum(dim=1)
    n_d = (~pos).flatten(1).sum(dim=1)
    miss = torch.where(pos, (1.0 - f_hat) ** 2, torch.zeros_like(f_hat)).flatten(1).sum(dim=1)
    alarm = torch.where(~pos, f_hat**2, torch.zeros_like(f_hat)).flatten(1).sum(dim=1)
    per_sample = miss / n_e.clamp(min=1) + alarm / n_d.clamp(min=1)
    return per_sample.mean()


def offset_loss(f: torch.Tensor, o: torch.Tensor, o_hat: torch.Tensor) -> torch.Tensor:
    """o, o_hat: (B, 2, h1, w1); only key-point cells contribute."""
    pos = (f > 0.5).unsqueeze(1)
    n_e = pos.flatten(1).sum(dim=1)
    se = torch.where(pos, (o - o_hat) ** 2, torch.zeros_like(o)).flatten(1).sum(dim=1)
    return (se / n_e.clamp(min=1)).mean()


def depth_loss(f: torch.Tensor, z: torch.Tensor, z_hat: torch.Tensor) -> torch.Tensor:
    """z, z_hat: (B, h1, w1); only key-point cells contribute."""
    pos = f > 0.5
    n_e = pos.flatten(1).sum(dim=1)
    se = torch.where(pos, (z - z_hat) ** 2, torch.zeros_like(z)).flatten(1).sum(dim=1)
    return (se / n_e.clamp(min=1)).mean()


def stack_losses(
    outputs, f: torch.Tensor, o: torch.Tensor, z: torch.Tensor, gamma: float
) -> dict[str, torch.Tensor]:
    """Component losses summed over hourglass stacks plus the total."""
    device = f.device
    l_conf = torch.zeros((), device=device)
    l_offset = torch.zeros((), device=device)
    l_depth = torch.zeros((), device=device)
    for out in outputs:
        l_conf = l_conf + conf_loss(f, out["conf"].squeeze(1))
        l_offset = l_offset + offset_loss(f, o, out["offset"])
        l_depth = l_depth + depth_loss(f, z, out["depth"].squeeze(1))
    return {
        "l_conf": l_conf,
        "l_offset": l_offset,
        "l_depth": l_depth,
        "l_total": l_conf + l_offset + gamma * l_depth,
    }
