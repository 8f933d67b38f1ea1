from __future__ import annotations

import logging
import os
from typing import List, Optional

from ..core.errors import SchemaMismatchError, UsageError
from ..core.types import EvalReport, Settings
from ..evaluation.experiment import evaluate_artifact, run_experiment
from ..evaluation.periods import parse_periods
from ..evaluation.summary import report_to_json, weekly_series_frame
from ..models.artifact import load_artifact
from ..models.registry import check_compatible
from ..utils.jsonio import save_json_atomic
from .outputs import claim_outputs
from .train_stage import open_dataset

logger = logging.getLogger(__name__)

REPORT_PREFIX = "report_"


def report_paths(out_dir: str, kind: str, schema: str, period_label: str) -> List[str]:
    stem = f"{kind}_{schema}_{period_label}"
    return [os.path.join(out_dir, f"{REPORT_PREFIX}{stem}.json"), os.path.join(out_dir, f"weekly_{stem}.csv")]


def write_report(report: EvalReport, out_dir: str) -> str:
    json_path, csv_path = report_paths(out_dir, report.model_kind, report.schema, report.period_label)
    save_json_atomic(report_to_json(report), json_path)
    frame = weekly_series_frame(report)
    tmp = csv_path + ".tmp"
    frame.to_csv(tmp, index=False)
    os.replace(tmp, csv_path)
    return json_path


def _print_report(report: EvalReport) -> None:
    out = "n/a" if report.out_period_f1 is None else f"{report.out_period_f1:.4f}"
    pp = "n/a" if report.degradation_pp is None else f"{report.degradation_pp:.1f} pp"
    inside = "n/a" if report.in_period_f1 is None else f"{report.in_period_f1:.4f}"
    print(f"{report.model_kind}/{report.schema} trained on {report.period_label}: "
          f"in-period F1 {inside}, out-of-period F1 {out}, degradation {pp}")


def evaluate(store_dir: str, out_dir: str, *, schema: Optional[str] = None, kind: Optional[str] = None,
             settings: Optional[Settings] = None, periods: Optional[str] = None, seed: Optional[int] = None,
             model_path: Optional[str] = None, week_origin: Optional[float] = None,
             force: bool = False) -> List[EvalReport]:
    """Weekly evaluation: train-and-score every period, or score one saved model."""
    settings = settings or Settings()
    if model_path is not None:
        artifact = load_artifact(model_path)
        if schema is not None and schema != artifact.schema:
            raise SchemaMismatchError(f"model file holds a '{artifact.kind}' model for schema '{artifact.schema}', "
                                      f"not schema '{schema}'")
        claim_outputs(report_paths(out_dir, artifact.kind, artifact.schema, artifact.training_period), force)
        origin = week_origin if week_origin is not None else artifact.week_origin
        dataset = open_dataset(store_dir, artifact.schema, settings, origin)
        reports = [evaluate_artifact(artifact, dataset, settings)]
    else:
        if schema is None or kind is None:
            raise UsageError("evaluate needs --schema and --model, or --model-path")
        check_compatible(schema, kind)
        spec = parse_periods(periods or settings.evaluation.periods)
        seed = settings.seed if seed is None else seed
        claim_outputs([p for period in spec.periods for p in report_paths(out_dir, kind, schema, period.label)],
                      force)
        dataset = open_dataset(store_dir, schema, settings, week_origin)
        reports = run_experiment(dataset, kind, spec, seed, settings)

    os.makedirs(out_dir, exist_ok=True)
    for report in reports:
        path = write_report(report, out_dir)
        logger.info("wrote %s", path)
        _print_report(report)
    return reports
