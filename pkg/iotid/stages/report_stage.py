from __future__ import annotations

import glob
import logging
import os
from typing import Dict, List, Optional, Sequence

import pandas as pd

from ..capture.manifest import load_manifest
from ..core.errors import DataError
from ..core.types import EvalReport
from ..evaluation.summary import (
    degradation_by_distance,
    degradation_summary,
    per_device_degradation,
    plot_data,
    report_from_json,
)
from ..utils.jsonio import load_json
from .evaluate_stage import REPORT_PREFIX
from .outputs import claim_outputs

logger = logging.getLogger(__name__)

SUMMARY_FILE = "degradation.csv"
PER_DEVICE_FILE = "per_device_degradation.csv"
DISTANCE_FILE = "degradation_by_distance.csv"


def collect_reports(inputs: Sequence[str]) -> List[EvalReport]:
    """Reports from JSON files or from every ``report_*.json`` inside the given directories."""
    paths: List[str] = []
    for item in inputs:
        if os.path.isdir(item):
            paths.extend(sorted(glob.glob(os.path.join(item, f"{REPORT_PREFIX}*.json"))))
        elif os.path.exists(item):
            paths.append(item)
        else:
            raise DataError(f"report not found: {item}")
    reports = []
    for path in paths:
        try:
            reports.append(report_from_json(load_json(path)))
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{path} is not an evaluation report: {exc}") from None
    if not reports:
        raise DataError(f"no evaluation reports under {', '.join(inputs)}")
    return reports


def distance_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = [
        {"model": r.model_kind, "schema": r.schema, "period": r.period_label, "distance": d, "macro_f1": f1}
        for r in reports
        for d, f1 in degradation_by_distance(r).items()
    ]
    return pd.DataFrame(rows, columns=["model", "schema", "period", "distance", "macro_f1"])


def report(inputs: Sequence[str], out_dir: str, *, manifest_path: Optional[str] = None,
           force: bool = False) -> pd.DataFrame:
    """Merge evaluation reports into the degradation table and per-panel plot data."""
    reports = collect_reports(inputs)
    reports.sort(key=lambda r: (r.model_kind, r.schema, r.period_weeks))
    panels = plot_data(reports)
    claim_outputs([os.path.join(out_dir, name) for name in (SUMMARY_FILE, PER_DEVICE_FILE, DISTANCE_FILE, *panels)],
                  force)

    names: Dict[int, str] = {}
    if manifest_path is not None:
        names = {e.device_id: e.name for e in load_manifest(manifest_path).entries}

    os.makedirs(out_dir, exist_ok=True)
    summary = degradation_summary(reports)
    summary.to_csv(os.path.join(out_dir, SUMMARY_FILE), index=False)
    per_device_degradation(reports, names).to_csv(os.path.join(out_dir, PER_DEVICE_FILE), index=False)
    distance_frame(reports).to_csv(os.path.join(out_dir, DISTANCE_FILE), index=False)
    for name, frame in panels.items():
        frame.to_csv(os.path.join(out_dir, name), index=False)
    logger.info("merged %d reports into %s", len(reports), out_dir)

    print(summary.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return summary
