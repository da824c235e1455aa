# src.utils.metrics
from typing import Tuple

import numpy as np

from ..models.errors import DegenerateDataError, ShapeError


def relative_l2_error(predictions, targets) -> float:
    """||pred - target|| / ||target||."""
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise ShapeError(f"{p.shape[0]} predictions for {t.shape[0]} targets")
    denom = np.linalg.norm(t)
    if denom == 0:
        raise DegenerateDataError("relative error undefined for an all-zero target")
    return float(np.linalg.norm(p - t) / denom)


def accuracy(predicted, actual) -> float:
    p = np.asarray(predicted).reshape(-1)
    a = np.asarray(actual).reshape(-1)
    if p.shape != a.shape:
        raise ShapeError(f"{p.shape[0]} predictions for {a.shape[0]} labels")
    if p.size == 0:
        return 0.0
    return float(np.mean(p == a))


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return 1.0 - ss_res / ss_tot


def log_linear_fit(t, values) -> Tuple[float, float, float]:
    """Least-squares fit of log(values) = slope * t + intercept. Returns (slope, intercept, R²)."""
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if t.shape != v.shape or t.size < 2:
        raise ShapeError("log-linear fit needs at least two matching samples")
    if np.any(v <= 0):
        raise DegenerateDataError("log-linear fit needs strictly positive values")
    y = np.log(v)
    slope, intercept = np.polyfit(t, y, 1)
    return float(slope), float(intercept), _r_squared(y, slope * t + intercept)
