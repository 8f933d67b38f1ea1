from __future__ import annotations

import math
import re
from typing import Iterable, List, Optional

import numpy as np

from ..core.errors import ExperimentError, UsageError
from ..core.types import Period, PeriodSpec

SECONDS_PER_WEEK = 604800
SECONDS_PER_DAY = 86400
DEFAULT_PERIODS = "P1:1-9,P2:10-18,P3:19-27"

_PERIOD_RE = re.compile(r"^\s*([A-Za-z0-9_.-]+)\s*:\s*(\d+)\s*-\s*(\d+)\s*$")


def parse_periods(text: str, week_origin: Optional[float] = None) -> PeriodSpec:
    """Parse ``"P1:1-9,P2:10-18"``; periods must be disjoint and in week order."""
    periods: List[Period] = []
    for part in (text or "").split(","):
        if not part.strip():
            continue
        match = _PERIOD_RE.match(part)
        if not match:
            raise UsageError(f"bad period '{part.strip()}': expected LABEL:START-END")
        label, start, end = match.group(1), int(match.group(2)), int(match.group(3))
        if start < 1 or end < start:
            raise UsageError(f"bad period '{part.strip()}': weeks start at 1 and END >= START")
        if periods and start <= periods[-1].end_week:
            raise UsageError(f"period '{label}' overlaps or precedes '{periods[-1].label}'")
        if any(p.label == label for p in periods):
            raise UsageError(f"duplicate period label '{label}'")
        periods.append(Period(label, start, end))
    if not periods:
        raise UsageError("no periods given")
    return PeriodSpec(periods, week_origin)


def format_periods(spec: PeriodSpec) -> str:
    return ",".join(f"{p.label}:{p.start_week}-{p.end_week}" for p in spec.periods)


def assign_week(timestamp: float, week_origin: float) -> int:
    if timestamp < week_origin:
        raise ExperimentError(f"timestamp {timestamp} precedes the week origin {week_origin}")
    return 1 + int(math.floor((timestamp - week_origin) / SECONDS_PER_WEEK))


def assign_weeks(timestamps: Iterable[float], week_origin: float) -> np.ndarray:
    t = np.asarray(list(timestamps) if not isinstance(timestamps, np.ndarray) else timestamps, dtype=np.float64)
    if t.size and t.min() < week_origin:
        raise ExperimentError(f"timestamp {t.min()} precedes the week origin {week_origin}")
    return 1 + np.floor((t - week_origin) / SECONDS_PER_WEEK).astype(np.int64)


def default_week_origin(timestamps: Iterable[float]) -> float:
    """UTC midnight at or before the earliest timestamp."""
    t = np.asarray(list(timestamps) if not isinstance(timestamps, np.ndarray) else timestamps, dtype=np.float64)
    if t.size == 0:
        raise ExperimentError("cannot place week 1 on an empty dataset")
    return float(math.floor(t.min() / SECONDS_PER_DAY) * SECONDS_PER_DAY)
