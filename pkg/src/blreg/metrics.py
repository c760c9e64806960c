"""Registration quality metrics."""

from __future__ import annotations

import numpy as np


def mse_rel(warped: np.ndarray, source: np.ndarray, target: np.ndarray) -> float:
    """Residual mismatch after registration as a percentage.

    ``100 * ||warped - target||^2 / ||source - target||^2`` in the grid L2
    norm.  Identical source and target define the value as 0.
    """
    denom = float(np.sum((source - target) ** 2))
    if denom == 0.0:
        return 0.0
    return 100.0 * float(np.sum((warped - target) ** 2)) / denom


def dice(a: np.ndarray, b: np.ndarray, label: int = 1) -> float:
    """Dice overlap ``2|A & B| / (|A| + |B|)`` of one label; 1 if both empty."""
    if a.shape != b.shape:
        raise ValueError("label volumes must share a grid")
    mask_a = a == label
    mask_b = b == label
    total = int(mask_a.sum()) + int(mask_b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(mask_a, mask_b).sum()) / total


def jacobian_extrema(det: np.ndarray) -> tuple[float, float]:
    return float(det.min()), float(det.max())
