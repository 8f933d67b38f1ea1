from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import ExperimentError, SchemaMismatchError
from ..core.types import EvalReport, ModelArtifact, Period, PeriodSpec, Settings
from ..models.metrics import f1_scores
from ..models.registry import LoadedModel, check_compatible, train_model
from .dataset import Dataset
from .split import stratified_split

logger = logging.getLogger(__name__)

NETWORK_KINDS = ("fcnn", "cnn")


@dataclass
class PeriodRun:
    report: EvalReport
    artifact: ModelArtifact
    train_ids: np.ndarray
    evaluated_ids: Dict[int, np.ndarray] = field(default_factory=dict)


def period_rows(dataset: Dataset, period: Period) -> np.ndarray:
    rows = np.flatnonzero((dataset.weeks >= period.start_week) & (dataset.weeks <= period.end_week))
    if rows.size == 0:
        raise ExperimentError(f"period '{period.label}' (weeks {period.start_week}-{period.end_week}) has no data")
    return rows


def split_period(dataset: Dataset, period: Period, seed: int, train_fraction: float) -> Tuple[np.ndarray, np.ndarray]:
    """Training and held-out row ids of one period."""
    rows = period_rows(dataset, period)
    train, test = stratified_split(dataset.labels[rows], train_fraction, seed)
    return rows[train], rows[test]


def train_for_period(dataset: Dataset, kind: str, period: Period, seed: int,
                     settings: Settings) -> Tuple[ModelArtifact, np.ndarray, np.ndarray]:
    """Train on a period's training split; returns the model, training ids and held-out ids."""
    check_compatible(dataset.schema, kind)
    train_ids, test_ids = split_period(dataset, period, seed, settings.evaluation.train_fraction)
    fit_ids, validation = train_ids, None
    if kind in NETWORK_KINDS and settings.network.validation_fraction > 0:
        fit, val = stratified_split(dataset.labels[train_ids], 1.0 - settings.network.validation_fraction, seed + 1)
        if len(val):
            fit_ids = train_ids[fit]
            validation = dataset.take(train_ids[val])
    frame, grids, labels = dataset.take(fit_ids)
    artifact = train_model(
        kind, dataset.schema, frame, grids, labels,
        class_count=dataset.class_count, settings=settings, seed=seed, validation=validation,
        training_period=period.label, period_weeks=(period.start_week, period.end_week),
        week_origin=dataset.week_origin,
    )
    return artifact, train_ids, test_ids


def evaluate_weekly(model: LoadedModel, dataset: Dataset, period: Period, train_ids: np.ndarray,
                    held_out_ids: np.ndarray, seed: int) -> Tuple[EvalReport, Dict[int, np.ndarray]]:
    """Weekly macro/weighted F1; the training period is scored on its held-out rows only."""
    in_period = (dataset.weeks >= period.start_week) & (dataset.weeks <= period.end_week)
    mask = ~in_period
    mask[held_out_ids] = True
    evaluated = np.flatnonzero(mask)
    leaked = np.intersect1d(evaluated, train_ids)
    if leaked.size:
        raise ExperimentError(f"{leaked.size} training rows of period '{period.label}' reached evaluation")

    report = EvalReport(
        model_kind=model.artifact.kind,
        schema=dataset.schema,
        period_label=period.label,
        period_weeks=(period.start_week, period.end_week),
        seed=seed,
    )
    evaluated_by_week: Dict[int, np.ndarray] = {}
    if evaluated.size:
        frame, grids, labels = dataset.take(evaluated)
        predicted = np.argmax(model.predict_proba(frame, grids), axis=1)
        weeks = dataset.weeks[evaluated]
        for week in np.unique(weeks):
            sel = weeks == week
            scores = f1_scores(predicted[sel], labels[sel], dataset.class_count)
            w = int(week)
            evaluated_by_week[w] = evaluated[sel]
            report.weekly_macro_f1[w] = scores.macro_f1
            report.weekly_weighted_f1[w] = scores.weighted_f1
            report.weekly_support[w] = int(sel.sum())
            report.weekly_class_f1[w] = {c: s.f1 for c, s in scores.per_class.items() if s.support}

    in_scores = [f for w, f in report.weekly_macro_f1.items() if period.contains(w)]
    out_scores = [f for w, f in report.weekly_macro_f1.items() if not period.contains(w)]
    report.in_period_f1 = float(np.mean(in_scores)) if in_scores else None
    report.out_period_f1 = float(np.mean(out_scores)) if out_scores else None
    if report.in_period_f1 is not None and report.out_period_f1 is not None:
        report.degradation_pp = (report.in_period_f1 - report.out_period_f1) * 100.0
    return report, evaluated_by_week


def run_period(dataset: Dataset, kind: str, period: Period, seed: int, settings: Settings) -> PeriodRun:
    artifact, train_ids, test_ids = train_for_period(dataset, kind, period, seed, settings)
    report, evaluated = evaluate_weekly(LoadedModel(artifact), dataset, period, train_ids, test_ids, seed)
    logger.info("%s/%s trained on %s: in %.3f out %s", kind, dataset.schema, period.label,
                report.in_period_f1 or 0.0,
                "absent" if report.out_period_f1 is None else f"{report.out_period_f1:.3f}")
    return PeriodRun(report, artifact, train_ids, evaluated)


def run_experiment(dataset: Dataset, kind: str, periods: PeriodSpec, seed: int,
                   settings: Optional[Settings] = None) -> List[EvalReport]:
    """One EvalReport per training period."""
    settings = settings or Settings()
    check_compatible(dataset.schema, kind)
    return [run_period(dataset, kind, p, seed, settings).report for p in periods.periods]


def evaluate_artifact(artifact: ModelArtifact, dataset: Dataset, settings: Optional[Settings] = None) -> EvalReport:
    """Evaluate a saved model, rebuilding its training split from the recorded seed and period."""
    settings = settings or Settings()
    if artifact.schema != dataset.schema:
        raise SchemaMismatchError(f"model expects schema '{artifact.schema}', store holds '{dataset.schema}'")
    start, end = artifact.period_weeks
    period = Period(artifact.training_period, int(start), int(end))
    train_ids, test_ids = split_period(dataset, period, artifact.seed, settings.evaluation.train_fraction)
    report, _ = evaluate_weekly(LoadedModel(artifact), dataset, period, train_ids, test_ids, artifact.seed)
    return report
