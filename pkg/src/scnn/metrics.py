"""Scalar evaluation measures."""

from dataclasses import dataclass

import numpy as np

TH_MAX = 0.5


@dataclass(frozen=True)
class SparsityCurve:
    thresholds: np.ndarray
    values: np.ndarray


def rms_error(x, x_rec):
    x = np.asarray(x, dtype=np.float64)
    x_rec = np.asarray(x_rec, dtype=np.float64)
    if x.shape != x_rec.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_rec.shape}")
    return float(np.sqrt(np.mean((x - x_rec) ** 2)))


def sparsity_value(u, th):
    """One minus the fraction of code entries with |u| strictly above ``th``."""
    if not 0.0 <= th <= TH_MAX:
        raise ValueError(f"threshold must lie in [0, {TH_MAX}], got {th}")
    u = np.asarray(u, dtype=np.float64)
    return 1.0 - float(np.count_nonzero(np.abs(u) > th)) / u.size


def sparsity_curve(u, thresholds=None):
    if thresholds is None:
        thresholds = np.linspace(0.0, TH_MAX, 51)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    return SparsityCurve(thresholds, np.array([sparsity_value(u, t) for t in thresholds]))


def _trapezoid(curve):
    th = np.asarray(curve.thresholds, dtype=np.float64)
    v = np.asarray(curve.values, dtype=np.float64)
    if th.size < 2 or th.size != v.size:
        raise ValueError("a sparsity curve needs at least two points of matching length")
    if np.any(np.diff(th) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    return float(np.sum(np.diff(th) * (v[1:] + v[:-1]) / 2.0)), float(th[-1] - th[0])


def sparsity_area(curve):
    """Trapezoidal area under the curve divided by the threshold span, in [0, 1]."""
    area, span = _trapezoid(curve)
    return area / span


def sparsity_area_raw(curve):
    return _trapezoid(curve)[0]


def accuracy(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"label vectors differ: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("accuracy of an empty label vector is undefined")
    return float(np.mean(pred == truth))


def error_rate(pred, truth):
    return 1.0 - accuracy(pred, truth)
