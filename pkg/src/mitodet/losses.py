"""Focal and Dice segmentation losses with analytic gradients.

Both losses take a prediction grid p in [0, 1] and a binary target grid y.
Gradients are with respect to p and are validated against central finite
differences in the test suite. Reductions use numpy's pairwise summation,
so results are deterministic and independent of traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossConfig:
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    dice_smooth: float = 1.0
    focal_weight: float = 1.0
    dice_weight: float = 1.0
    prob_clip: float = 1e-7

    def __post_init__(self):
        if self.focal_gamma < 0:
            raise ValueError(f"focal_gamma must be >= 0, got {self.focal_gamma}")
        if not 0.0 <= self.focal_alpha <= 1.0:
            raise ValueError(f"focal_alpha must lie in [0, 1], got {self.focal_alpha}")
        if self.dice_smooth <= 0:
            raise ValueError(f"dice_smooth must be > 0, got {self.dice_smooth}")
        if self.focal_weight < 0 or self.dice_weight < 0:
            raise ValueError("loss weights must be >= 0")
        if not 0.0 < self.prob_clip < 0.5:
            raise ValueError(f"prob_clip must lie in (0, 0.5), got {self.prob_clip}")


def _check_pair(p: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"prediction shape {p.shape} differs from target shape {y.shape}")
    return p, y


def focal_loss(
    p: np.ndarray, y: np.ndarray, cfg: LossConfig = LossConfig()
) -> tuple[float, np.ndarray]:
    """Mean focal loss and its gradient with respect to p.

    Per pixel: -alpha*y*(1-p)^gamma*log(p) - (1-alpha)*(1-y)*p^gamma*log(1-p),
    with p clipped to [eps, 1-eps] before the logs. The gradient is zero
    where the clip is active (the clamp is flat there).
    """
    p, y = _check_pair(p, y)
    a, g, eps = cfg.focal_alpha, cfg.focal_gamma, cfg.prob_clip
    pc = np.clip(p, eps, 1.0 - eps)
    log_p = np.log(pc)
    log_1p = np.log(1.0 - pc)
    pos = -a * y * (1.0 - pc) ** g * log_p
    neg = -(1.0 - a) * (1.0 - y) * pc**g * log_1p
    loss = float(np.mean(pos + neg))

    # d/dp of the per-pixel expression; gamma*x^(gamma-1) is finite on the
    # clipped range and the whole term vanishes for gamma == 0.
    dpos = -a * y * ((1.0 - pc) ** g / pc - g * (1.0 - pc) ** (g - 1.0) * log_p)
    dneg = -(1.0 - a) * (1.0 - y) * (g * pc ** (g - 1.0) * log_1p - pc**g / (1.0 - pc))
    grad = (dpos + dneg) / p.size
    grad = np.where((p > eps) & (p < 1.0 - eps), grad, 0.0)
    return loss, grad


def dice_loss(
    p: np.ndarray, y: np.ndarray, cfg: LossConfig = LossConfig()
) -> tuple[float, np.ndarray]:
    """Soft Dice loss 1 - (2*sum(p*y)+s)/(sum(p)+sum(y)+s) and its gradient."""
    p, y = _check_pair(p, y)
    s = cfg.dice_smooth
    numer = 2.0 * float(np.sum(p * y)) + s
    denom = float(np.sum(p) + np.sum(y)) + s
    loss = 1.0 - numer / denom
    grad = -(2.0 * y * denom - numer) / denom**2
    return loss, grad


def total_loss(
    p: np.ndarray, y: np.ndarray, cfg: LossConfig = LossConfig()
) -> tuple[float, np.ndarray]:
    """Weighted sum of focal and dice losses; gradients add linearly."""
    f_loss, f_grad = focal_loss(p, y, cfg)
    d_loss, d_grad = dice_loss(p, y, cfg)
    loss = cfg.focal_weight * f_loss + cfg.dice_weight * d_loss
    grad = cfg.focal_weight * f_grad + cfg.dice_weight * d_grad
    return loss, grad
