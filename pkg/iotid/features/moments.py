from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np


class Moments(NamedTuple):
    mean: float
    std: float
    var: float
    skew: float
    kurtosis: float


ZERO_MOMENTS = Moments(0.0, 0.0, 0.0, 0.0, 0.0)


def moments(series: Sequence[float]) -> Moments:
    """Population moments; kurtosis is non-excess.

    Constant (including single-element) series have zero spread, skew and
    kurtosis. Empty series give all zeros.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        return ZERO_MOMENTS
    mean = float(x.mean())
    if x.size == 1 or np.ptp(x) == 0:
        return Moments(float(x[0]), 0.0, 0.0, 0.0, 0.0)
    dev = x - mean
    var = float(np.mean(dev ** 2))
    if var == 0.0:
        return Moments(mean, 0.0, 0.0, 0.0, 0.0)
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    return Moments(mean, float(np.sqrt(var)), var, m3 / var ** 1.5, m4 / var ** 2)
