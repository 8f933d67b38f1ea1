from __future__ import annotations

import logging
import os
from typing import Iterable, Optional, TypeVar

from tqdm import tqdm

LOG_ENV = "IOTID_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

T = TypeVar("T")

_console_level = logging.WARNING


def _level_from_env(value: Optional[str]) -> int:
    if not value:
        return logging.WARNING
    value = value.strip()
    if value.isdigit():
        return int(value)
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else logging.WARNING


def configure_logging(level: Optional[str] = None) -> int:
    """Configure the root logger from IOTID_LOG (or an explicit level)."""
    global _console_level
    resolved = _level_from_env(level if level is not None else os.getenv(LOG_ENV))
    _console_level = resolved
    logging.basicConfig(level=resolved, format=LOG_FORMAT, force=True)
    return resolved


def add_run_log(output_dir: str) -> logging.Handler:
    """Mirror log records into <output_dir>/run.log (wall-clock sidecar)."""
    os.makedirs(output_dir, exist_ok=True)
    handler = logging.FileHandler(os.path.join(output_dir, "run.log"), encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(logging.INFO)
    root = logging.getLogger()
    for existing in root.handlers:
        if existing.level == logging.NOTSET:
            existing.setLevel(root.level)
    root.setLevel(min(root.level, logging.INFO))
    root.addHandler(handler)
    return handler


def progress(items: Iterable[T], *, desc: str, total: Optional[int] = None) -> Iterable[T]:
    disable = _console_level > logging.INFO
    return tqdm(items, desc=desc, total=total, disable=disable, leave=False)
