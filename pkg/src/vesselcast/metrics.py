"""Displacement metrics and the constant-velocity yardstick (plain numpy)."""

from __future__ import annotations

import numpy as np


def ade_fde(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    """Average and final Euclidean displacement between equal-length tracks."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or len(pred) < 1:
        raise ValueError(f"ade_fde shapes disagree: {pred.shape} vs {gt.shape}")
    d = np.linalg.norm(pred - gt, axis=1)
    return float(d.mean()), float(d[-1])


def min_ade_fde_at_k(preds: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    """Best ADE and best FDE over modes, each minimized independently."""
    pairs = [ade_fde(p, gt) for p in preds]
    return min(a for a, _ in pairs), min(f for _, f in pairs)


def diversity(preds: np.ndarray) -> float:
    """Mean pairwise ADE between distinct modes; 0 for a single mode.

    Local convention only; not comparable to any externally reported number.
    """
    k = len(preds)
    if k < 2:
        return 0.0
    total = 0.0
    count = 0
    for i in range(k):
        for j in range(i + 1, k):
            total += ade_fde(preds[i], preds[j])[0]
            count += 1
    return total / count


def constant_velocity_baseline(observed: np.ndarray, t_fut: int) -> np.ndarray:
    """Extrapolate with the mean velocity of the last min(3, T_obs-1) steps."""
    observed = np.asarray(observed, dtype=np.float64)
    t_obs = len(observed)
    if t_obs < 2:
        raise ValueError(f"constant-velocity baseline needs >= 2 observed points, got {t_obs}")
    span = min(3, t_obs - 1)
    velocity = (observed[-1] - observed[-1 - span]) / span
    steps = np.arange(1, t_fut + 1)[:, None]
    return observed[-1] + steps * velocity
