from __future__ import annotations

import logging
import os
from typing import Optional

from ..capture.manifest import load_manifest
from ..core.errors import UsageError
from ..core.types import ModelArtifact, Period, Settings
from ..evaluation.dataset import Dataset, load_dataset
from ..evaluation.experiment import train_for_period
from ..evaluation.periods import parse_periods
from ..models.artifact import save_artifact
from ..models.registry import check_compatible
from .ingest_stage import MANIFEST_FILE
from .outputs import claim_outputs

logger = logging.getLogger(__name__)


def open_dataset(store_dir: str, schema: str, settings: Settings, week_origin: Optional[float] = None) -> Dataset:
    """Load a schema's rows, sized to the manifest stored beside them."""
    manifest_path = os.path.join(store_dir, MANIFEST_FILE)
    class_count = len(load_manifest(manifest_path).entries) if os.path.exists(manifest_path) else None
    origin = week_origin if week_origin is not None else settings.evaluation.week_origin
    return load_dataset(store_dir, schema, week_origin=origin, class_count=class_count,
                        grid_shape=(settings.grid.rows, settings.grid.cols))


def pick_period(periods_text: str, label: Optional[str]) -> Period:
    periods = parse_periods(periods_text).periods
    if label is None:
        return periods[0]
    for period in periods:
        if period.label == label:
            return period
    known = ", ".join(p.label for p in periods)
    raise UsageError(f"unknown period '{label}' (periods: {known})")


def train(store_dir: str, schema: str, kind: str, model_path: str, *, settings: Optional[Settings] = None,
          periods: Optional[str] = None, period_label: Optional[str] = None, seed: Optional[int] = None,
          week_origin: Optional[float] = None, force: bool = False) -> ModelArtifact:
    """Train one model on one period's training split and save it to ``model_path``."""
    settings = settings or Settings()
    check_compatible(schema, kind)
    period = pick_period(periods or settings.evaluation.periods, period_label)
    claim_outputs([model_path], force)
    seed = settings.seed if seed is None else seed

    dataset = open_dataset(store_dir, schema, settings, week_origin)
    artifact, train_ids, _ = train_for_period(dataset, kind, period, seed, settings)
    size = save_artifact(artifact, model_path)
    logger.info("trained %s on %d rows of %s", kind, len(train_ids), schema)

    print(f"model: {model_path} ({size} bytes)")
    if artifact.best_epoch is not None:
        best = artifact.history[artifact.best_epoch - 1]["accuracy"] if artifact.history else float("nan")
        print(f"best epoch: {artifact.best_epoch} of {len(artifact.history)} (held-out accuracy {best:.4f})")
    return artifact
