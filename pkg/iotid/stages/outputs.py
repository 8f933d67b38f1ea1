from __future__ import annotations

import os
from typing import Iterable

from ..core.errors import UsageError


def claim_outputs(paths: Iterable[str], force: bool) -> None:
    """Refuse to overwrite existing outputs unless ``force`` is set."""
    if force:
        return
    existing = [p for p in paths if os.path.exists(p)]
    if existing:
        raise UsageError(f"output already exists: {existing[0]} (pass --force to overwrite)")
