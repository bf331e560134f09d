"""Forecast-error metrics: MAPE, RMSE and MASE."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from elecmarket.errors import MetricUndefinedError


@dataclass(frozen=True)
class ForecastEvalSeries:
    """Actual and predicted values, plus the training history MASE scales by."""

    actual: np.ndarray
    predicted: np.ndarray
    history: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.actual, dtype=float).ravel()
        p = np.asarray(self.predicted, dtype=float).ravel()
        if a.size < 1 or a.shape != p.shape:
            raise ValueError("actual and predicted must be non-empty and of equal length")
        object.__setattr__(self, "actual", a)
        object.__setattr__(self, "predicted", p)
        if self.history is not None:
            object.__setattr__(self, "history", np.asarray(self.history, dtype=float).ravel())


def _series(series, predicted=None, history=None):
    if isinstance(series, ForecastEvalSeries):
        return series
    return ForecastEvalSeries(series, predicted, history)


def mape(series, predicted=None):
    """Mean absolute percentage error, in percent."""
    s = _series(series, predicted)
    if np.any(s.actual == 0):
        raise MetricUndefinedError("MAPE is undefined when an actual value is zero")
    return float(np.mean(np.abs((s.actual - s.predicted) / s.actual)) * 100.0)


def rmse(series, predicted=None):
    s = _series(series, predicted)
    return float(np.sqrt(np.mean((s.predicted - s.actual) ** 2)))


def mase(series, predicted=None, history=None):
    """Forecast MAE divided by the in-sample MAE of the one-step naive forecast."""
    s = _series(series, predicted, history)
    if s.history is None or s.history.size < 2:
        raise MetricUndefinedError("MASE needs at least two history points")
    scale = float(np.mean(np.abs(np.diff(s.history))))
    if scale == 0:
        raise MetricUndefinedError("MASE is undefined for a constant history")
    return float(np.mean(np.abs(s.actual - s.predicted)) / scale)
