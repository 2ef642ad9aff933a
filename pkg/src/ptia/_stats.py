"""Small numeric helpers shared by the sweep, calibration and Monte Carlo code."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class LineFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def ols(x, y) -> LineFit:
    """Ordinary least-squares line through ``(x, y)``.

    Raises ``ZeroDivisionError`` when all ``x`` are equal; callers translate
    that into their own error type.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    x_mean = math.fsum(x) / n
    y_mean = math.fsum(y) / n
    dx = x - x_mean
    dy = y - y_mean
    sxx = math.fsum(dx * dx)
    if sxx == 0.0:
        raise ZeroDivisionError("all abscissae are identical")
    sxy = math.fsum(dx * dy)
    syy = math.fsum(dy * dy)
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    if syy == 0.0:
        r2 = 1.0
    else:
        resid = y - (intercept + slope * x)
        r2 = 1.0 - math.fsum(resid * resid) / syy
    return LineFit(slope, intercept, min(1.0, max(0.0, r2)))


def mean_std(values) -> tuple[float, float]:
    """Two-pass mean and sample standard deviation with exact summation.

    ``math.fsum`` is correctly rounded, so the result does not depend on the
    order of ``values``.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = math.fsum(values) / n
    # one correction step: exact when all values are equal
    mean += math.fsum(values - mean) / n
    if n < 2:
        return mean, 0.0
    dev = values - mean
    return mean, math.sqrt(math.fsum(dev * dev) / (n - 1))
