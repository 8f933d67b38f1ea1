from __future__ import annotations

from typing import Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..core.types import PacketRecord, SecondWindowRow


def extract_second_window(packets: Iterable[Tuple[int, PacketRecord]]) -> List[SecondWindowRow]:
    """One row per device per nonempty wall-clock second."""
    data = [(device_id, float(np.floor(p.timestamp)), p.wire_len) for device_id, p in packets]
    if not data:
        return []
    df = pd.DataFrame(data, columns=["device_id", "second", "wire_len"])
    by_second = df.groupby(["device_id", "second"], sort=True)["wire_len"]
    grouped = pd.DataFrame({
        "bytes_sum": by_second.sum(),
        "bytes_avg": by_second.mean(),
        "bytes_std": by_second.std(ddof=0).fillna(0.0),
    }).reset_index()
    return [
        SecondWindowRow(
            device_id=int(r.device_id),
            second_start=float(r.second),
            bytes_sum=float(r.bytes_sum),
            bytes_avg=float(r.bytes_avg),
            bytes_std=float(r.bytes_std),
        )
        for r in grouped.itertuples(index=False)
    ]
