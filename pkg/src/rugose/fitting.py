"""Least-squares power-law fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveData


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, float) ** self.slope


def fit_loglog(points):
    """Fit ``log y = slope * log x + intercept`` by least squares.

    ``points`` is a sequence of ``(x, y)`` pairs; at least three are needed
    and every coordinate must be positive.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise NonPositiveData("need at least three (x, y) points")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise NonPositiveData("log-log fit needs finite positive data")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise NonPositiveData("all x values coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LogLogFit(float(slope), float(intercept), float(min(1.0, max(0.0, r2))))
