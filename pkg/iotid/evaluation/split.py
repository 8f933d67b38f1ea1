from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from ..core.errors import ExperimentError


def stratified_split(labels: Sequence[int], fraction: float = 0.8,
                     seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Per class, a seeded shuffle then round-half-up(fraction·n) rows to train.

    Returns sorted positional indices (train, test); together they cover every row once.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ExperimentError("cannot split an empty dataset")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("split fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        rows = rng.permutation(np.flatnonzero(labels == c))
        k = int(math.floor(fraction * len(rows) + 0.5))
        train.append(rows[:k])
        test.append(rows[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
