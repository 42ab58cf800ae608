"""Losses used by the classifiers.

Each loss returns (mean loss over the batch, gradient of that mean with
respect to the predicted probabilities). Probabilities are clipped away
from 0 and 1 before taking logs, so saturated predictions stay finite.
"""

import numpy as np

from ..errors import ShapeError

_EPS = 1e-12


def binary_cross_entropy(probs: np.ndarray, targets: np.ndarray):
    """probs, targets: (B, 1) arrays; targets in {0, 1}."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeError(f"target shape {targets.shape} does not match "
                         f"prediction shape {probs.shape}")
    n = probs.shape[0]
    p = np.clip(probs, _EPS, 1.0 - _EPS)
    loss = -(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)).sum() / n
    d_probs = (p - targets) / (p * (1.0 - p)) / n
    return loss, d_probs


def categorical_cross_entropy(probs: np.ndarray, targets: np.ndarray):
    """probs, targets: (B, C); targets are one-hot rows."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeError(f"target shape {targets.shape} does not match "
                         f"prediction shape {probs.shape}")
    n = probs.shape[0]
    p = np.clip(probs, _EPS, 1.0)
    loss = -(targets * np.log(p)).sum() / n
    d_probs = -(targets / p) / n
    return loss, d_probs


LOSSES = {
    "binary_cross_entropy": binary_cross_entropy,
    "categorical_cross_entropy": categorical_cross_entropy,
}
