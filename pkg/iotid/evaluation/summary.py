from __future__ import annotations

from collections import defaultdict
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.types import EvalReport

SUMMARY_COLUMNS = ["model", "schema", "period", "in_f1", "out_f1", "degradation_pp"]
MEAN_LABEL = "mean"


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def degradation_summary(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """One row per report plus a cross-period mean row per (model, schema)."""
    rows: List[Dict[str, Any]] = []
    groups: Dict[tuple, List[EvalReport]] = defaultdict(list)
    for r in reports:
        rows.append({
            "model": r.model_kind,
            "schema": r.schema,
            "period": r.period_label,
            "in_f1": r.in_period_f1,
            "out_f1": r.out_period_f1,
            "degradation_pp": r.degradation_pp,
        })
        groups[(r.model_kind, r.schema)].append(r)
    for (model, schema), group in groups.items():
        rows.append({
            "model": model,
            "schema": schema,
            "period": MEAN_LABEL,
            "in_f1": _mean(r.in_period_f1 for r in group),
            "out_f1": _mean(r.out_period_f1 for r in group),
            "degradation_pp": _mean(r.degradation_pp for r in group),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def week_distance(week: int, start_week: int, end_week: int) -> int:
    if start_week <= week <= end_week:
        return 0
    return start_week - week if week < start_week else week - end_week


def degradation_by_distance(report: EvalReport) -> Dict[int, float]:
    """Mean weekly macro-F1 keyed by distance in weeks from the training period (0 = inside)."""
    start, end = report.period_weeks
    buckets: Dict[int, List[float]] = defaultdict(list)
    for week, f1 in report.weekly_macro_f1.items():
        buckets[week_distance(week, start, end)].append(f1)
    return {d: float(np.mean(v)) for d, v in sorted(buckets.items())}


def weekly_series_frame(report: EvalReport) -> pd.DataFrame:
    start, end = report.period_weeks
    rows = [
        {
            "week": w,
            "macro_f1": report.weekly_macro_f1[w],
            "weighted_f1": report.weekly_weighted_f1.get(w),
            "support": report.weekly_support.get(w, 0),
            "in_period": int(start <= w <= end),
        }
        for w in sorted(report.weekly_macro_f1)
    ]
    return pd.DataFrame(rows, columns=["week", "macro_f1", "weighted_f1", "support", "in_period"])


def per_device_degradation(reports: Sequence[EvalReport],
                           device_names: Optional[Dict[int, str]] = None) -> pd.DataFrame:
    rows = []
    for r in reports:
        start, end = r.period_weeks
        devices = sorted({c for per_class in r.weekly_class_f1.values() for c in per_class})
        for c in devices:
            inside = [f[c] for w, f in r.weekly_class_f1.items() if start <= w <= end and c in f]
            outside = [f[c] for w, f in r.weekly_class_f1.items() if not start <= w <= end and c in f]
            in_f1, out_f1 = _mean(inside), _mean(outside)
            rows.append({
                "device_id": c,
                "device": (device_names or {}).get(c, str(c)),
                "model": r.model_kind,
                "schema": r.schema,
                "period": r.period_label,
                "in_f1": in_f1,
                "out_f1": out_f1,
                "degradation_pp": None if in_f1 is None or out_f1 is None else (in_f1 - out_f1) * 100.0,
            })
    return pd.DataFrame(rows, columns=["device_id", "device", "model", "schema", "period",
                                       "in_f1", "out_f1", "degradation_pp"])


def plot_data(reports: Sequence[EvalReport]) -> Dict[str, pd.DataFrame]:
    """Per (model, schema) a week × training-period table of macro-F1, one line per period."""
    panels: Dict[tuple, List[EvalReport]] = defaultdict(list)
    for r in reports:
        panels[(r.model_kind, r.schema)].append(r)
    out: Dict[str, pd.DataFrame] = {}
    for (model, schema), group in sorted(panels.items()):
        weeks = sorted({w for r in group for w in r.weekly_macro_f1})
        frame = pd.DataFrame({"week": weeks})
        for r in group:
            frame[r.period_label] = [r.weekly_macro_f1.get(w) for w in weeks]
        out[f"plot_{model}_{schema}.csv"] = frame
    return out


def report_to_json(report: EvalReport) -> Dict[str, Any]:
    return {
        "model_kind": report.model_kind,
        "schema": report.schema,
        "period_label": report.period_label,
        "period_weeks": list(report.period_weeks),
        "seed": report.seed,
        "headline_metric": "macro_f1",
        "weekly_macro_f1": {str(w): v for w, v in sorted(report.weekly_macro_f1.items())},
        "weekly_weighted_f1": {str(w): v for w, v in sorted(report.weekly_weighted_f1.items())},
        "weekly_support": {str(w): v for w, v in sorted(report.weekly_support.items())},
        "weekly_class_f1": {
            str(w): {str(c): f for c, f in sorted(per_class.items())}
            for w, per_class in sorted(report.weekly_class_f1.items())
        },
        "in_period_f1": report.in_period_f1,
        "out_period_f1": report.out_period_f1,
        "degradation_pp": report.degradation_pp,
    }


def report_from_json(data: Dict[str, Any]) -> EvalReport:
    return EvalReport(
        model_kind=data["model_kind"],
        schema=data["schema"],
        period_label=data["period_label"],
        period_weeks=tuple(data["period_weeks"]),
        seed=int(data["seed"]),
        weekly_macro_f1={int(w): float(v) for w, v in data["weekly_macro_f1"].items()},
        weekly_weighted_f1={int(w): float(v) for w, v in data.get("weekly_weighted_f1", {}).items()},
        weekly_support={int(w): int(v) for w, v in data.get("weekly_support", {}).items()},
        weekly_class_f1={
            int(w): {int(c): float(f) for c, f in per_class.items()}
            for w, per_class in data.get("weekly_class_f1", {}).items()
        },
        in_period_f1=data.get("in_period_f1"),
        out_period_f1=data.get("out_period_f1"),
        degradation_pp=data.get("degradation_pp"),
    )
