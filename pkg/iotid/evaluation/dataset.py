from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.errors import DataError
from ..features.packet_grid import GRID_COLS, GRID_ROWS
from ..features.store import load_feature_frame, schema_info
from .periods import assign_weeks, default_week_origin


@dataclass
class Dataset:
    """One schema's labelled rows with their week assignment.

    ``row_ids`` are positional and stable for the lifetime of the dataset; the
    leakage audit compares them across training and evaluation sets.
    """

    schema: str
    frame: pd.DataFrame
    grids: Optional[np.ndarray]
    labels: np.ndarray
    times: np.ndarray
    weeks: np.ndarray
    row_ids: np.ndarray
    week_origin: float
    class_count: int

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, rows: Sequence[int]) -> Tuple[pd.DataFrame, Optional[np.ndarray], np.ndarray]:
        rows = np.asarray(rows, dtype=np.int64)
        frame = self.frame.iloc[rows].reset_index(drop=True)
        grids = self.grids[rows] if self.grids is not None else None
        return frame, grids, self.labels[rows]


def dataset_from_frame(schema: str, frame: pd.DataFrame, grids: Optional[np.ndarray] = None, *,
                       week_origin: Optional[float] = None, class_count: Optional[int] = None) -> Dataset:
    info = schema_info(schema)
    if len(frame) == 0:
        raise DataError(f"the {schema} feature store holds no rows")
    labels = frame["device_id"].to_numpy(dtype=np.int64)
    times = frame[info.time_column].to_numpy(dtype=np.float64)
    origin = default_week_origin(times) if week_origin is None else float(week_origin)
    count = int(class_count) if class_count is not None else int(labels.max()) + 1
    if labels.max() >= count:
        raise DataError(f"device id {labels.max()} outside the manifest's {count} devices")
    return Dataset(
        schema=schema,
        frame=frame.reset_index(drop=True),
        grids=grids,
        labels=labels,
        times=times,
        weeks=assign_weeks(times, origin),
        row_ids=np.arange(len(frame), dtype=np.int64),
        week_origin=origin,
        class_count=count,
    )


def load_dataset(store_dir: str, schema: str, *, week_origin: Optional[float] = None,
                 class_count: Optional[int] = None,
                 grid_shape: Tuple[int, int] = (GRID_ROWS, GRID_COLS)) -> Dataset:
    frame, grids = load_feature_frame(store_dir, schema, rows=grid_shape[0], cols=grid_shape[1])
    return dataset_from_frame(schema, frame, grids, week_origin=week_origin, class_count=class_count)
