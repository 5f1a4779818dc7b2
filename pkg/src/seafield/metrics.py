"""Masked point-forecast metrics on denormalized values."""
from __future__ import annotations

import numpy as np


class MetricDomainError(ValueError):
    """Raised when a metric is undefined for the given observed cells."""


def _observed(pred, target, mask):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction {pred.shape} and target {target.shape} differ")
    mask = np.ones(pred.shape, bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise MetricDomainError("no observed cells")
    return pred[mask], target[mask]


def mae(pred, target, mask=None) -> float:
    p, y = _observed(pred, target, mask)
    return float(np.mean(np.abs(p - y)))


def rmse(pred, target, mask=None) -> float:
    p, y = _observed(pred, target, mask)
    return float(np.sqrt(np.mean((p - y) ** 2)))


def mape(pred, target, mask=None) -> float:
    p, y = _observed(pred, target, mask)
    if np.any(y == 0):
        raise MetricDomainError("MAPE undefined for zero targets")
    return float(np.mean(np.abs((p - y) / y)))


def smape(pred, target, mask=None) -> float:
    """mean |(p - y) / (p + y)|, without the conventional factor of 2."""
    p, y = _observed(pred, target, mask)
    denom = p + y
    if np.any(denom == 0):
        raise MetricDomainError("sMAPE undefined where prediction + target = 0")
    return float(np.mean(np.abs((p - y) / denom)))


METRICS = {"mae": mae, "rmse": rmse, "mape": mape, "smape": smape}
