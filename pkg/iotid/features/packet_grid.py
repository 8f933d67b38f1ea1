from __future__ import annotations

from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..core.types import FlowKey, PacketGrid, PacketRecord, Transport
from ..flows.flow_table import flow_key_for

GRID_ROWS = 10
GRID_COLS = 250

_MAC_SPAN = slice(0, 12)
_ETH_HDR_LEN = 14
# source and destination addresses sit at bytes 12..19 of the IPv4 header
_IPV4_ADDR_SPAN = slice(_ETH_HDR_LEN + 12, _ETH_HDR_LEN + 20)


def anonymize_frame(frame: bytes, cols: int = GRID_COLS) -> np.ndarray:
    row = np.zeros(cols, dtype=np.uint8)
    head = np.frombuffer(frame[:cols], dtype=np.uint8)
    row[: head.size] = head
    row[_MAC_SPAN] = 0
    is_ipv4 = len(frame) >= _IPV4_ADDR_SPAN.stop and frame[12:14] == b"\x08\x00" and frame[14] >> 4 == 4
    if is_ipv4:
        row[_IPV4_ADDR_SPAN.start:min(_IPV4_ADDR_SPAN.stop, cols)] = 0
    return row


def build_packet_grid(packets: Sequence[PacketRecord], *, device_id: int, key: FlowKey,
                      rows: int = GRID_ROWS, cols: int = GRID_COLS) -> PacketGrid:
    if not packets:
        raise ValueError("a grid needs at least one packet")
    cells = np.zeros((rows, cols), dtype=np.uint8)
    for i, pkt in enumerate(packets[:rows]):
        cells[i] = anonymize_frame(pkt.data, cols)
    return PacketGrid(device_id=device_id, key=key, start_time=packets[0].timestamp, cells=cells)


def build_packet_grids(packets: Iterable[Tuple[int, PacketRecord]], *, rows: int = GRID_ROWS,
                       cols: int = GRID_COLS) -> List[PacketGrid]:
    """One grid per (device, flow key) over the whole capture, in first-seen order."""
    firsts: Dict[Tuple[int, FlowKey], List[PacketRecord]] = {}
    for device_id, pkt in packets:
        if pkt.transport == Transport.OTHER:
            continue
        bucket = firsts.setdefault((device_id, flow_key_for(pkt)), [])
        if len(bucket) < rows:
            bucket.append(pkt)
    return [
        build_packet_grid(pkts, device_id=device_id, key=key, rows=rows, cols=cols)
        for (device_id, key), pkts in firsts.items()
    ]
