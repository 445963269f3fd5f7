"""Oracle implementations of the training losses.

These are the reference against which any trainer is validated: squared
confidence error normalized separately over key-point and empty cells,
masked offset and depth squared errors normalized by the key-point count,
and their weighted sum.  Empty sums contribute zero (degenerate frames
with no key-points, or none empty, stay finite).

Closed-form gradients are provided alongside each loss so finite-difference
checks can pin both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, ShapeMismatch


@dataclass(frozen=True)
class LossConfig:
    """Weight of the depth term in the total loss."""

    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise InvariantViolation(f"gamma must be >= 0, got {self.gamma}")


def _check_binary_mask(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if not np.all((f == 0.0) | (f == 1.0)):
        raise InvariantViolation("confidence target must be binary")
    return f


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: {a.shape} != {b.shape}")


def conf_loss(f: np.ndarray, f_hat: np.ndarray) -> float:
    """Mean squared miss over key-point cells plus mean squared false alarm
    over empty cells."""
    f = _check_binary_mask(f)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    _check_same_shape(f, f_hat, "confidence grids")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    n_d = f.size - n_e
    loss = 0.0
    if n_e:
        loss += float(np.sum((1.0 - f_hat[pos]) ** 2)) / n_e
    if n_d:
        loss += float(np.sum(f_hat[~pos] ** 2)) / n_d
    return loss


def conf_loss_grad(f: np.ndarray, f_hat: np.ndarray) -> np.ndarray:
    f = _check_binary_mask(f)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    _check_same_shape(f, f_hat, "confidence grids")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    n_d = f.size - n_e
    grad = np.zeros_like(f_hat)
    if n_e:
        grad[pos] = -2.0 * (1.0 - f_hat[pos]) / n_e
    if n_d:
        grad[~pos] = 2.0 * f_hat[~pos] / n_d
    return grad


def offset_loss(f: np.ndarray, o: np.ndarray, o_hat: np.ndarray) -> float:
    """Mean squared offset error over key-point cells (both components)."""
    f = _check_binary_mask(f)
    o = np.asarray(o, dtype=np.float64)
    o_hat = np.asarray(o_hat, dtype=np.float64)
    _check_same_shape(o, o_hat, "offset grids")
    if o.shape[:-1] != f.shape or o.shape[-1] != 2:
        raise ShapeMismatch(f"offset grid {o.shape} incompatible with mask {f.shape}")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    if n_e == 0:
        return 0.0
    d = o[pos] - o_hat[pos]
    return float(np.sum(d * d)) / n_e


def offset_loss_grad(f: np.ndarray, o: np.ndarray, o_hat: np.ndarray) -> np.ndarray:
    f = _check_binary_mask(f)
    o = np.asarray(o, dtype=np.float64)
    o_hat = np.asarray(o_hat, dtype=np.float64)
    _check_same_shape(o, o_hat, "offset grids")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    grad = np.zeros_like(o_hat)
    if n_e:
        grad[pos] = -2.0 * (o[pos] - o_hat[pos]) / n_e
    return grad


def depth_loss(f: np.ndarray, z: np.ndarray, z_hat: np.ndarray) -> float:
    """Mean squared depth error over key-point cells."""
    f = _check_binary_mask(f)
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    _check_same_shape(z, z_hat, "depth grids")
    _check_same_shape(f, z, "depth vs mask")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    if n_e == 0:
        return 0.0
    d = z[pos] - z_hat[pos]
    return float(np.sum(d * d)) / n_e


def depth_loss_grad(f: np.ndarray, z: np.ndarray, z_hat: np.ndarray) -> np.ndarray:
    f = _check_binary_mask(f)
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    _check_same_shape(z, z_hat, "depth grids")
    pos = f == 1.0
    n_e = int(np.count_nonzero(pos))
    grad = np.zeros_like(z_hat)
    if n_e:
        grad[pos] = -2.0 * (z[pos] - z_hat[pos]) / n_e
    return grad


def total_loss(l_conf: float, l_offset: float, l_depth: float, cfg: LossConfig) -> float:
    """Weighted sum of the three parts."""
    if l_conf < 0 or l_offset < 0 or l_depth < 0:
        raise InvariantViolation("loss parts must be >= 0")
    return l_conf + l_offset + cfg.gamma * l_depth
