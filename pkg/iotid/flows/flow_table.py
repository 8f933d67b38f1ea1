from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from ..core.types import FlowKey, FlowRecord, PacketRecord, Transport
from .domain_map import DomainMap

logger = logging.getLogger(__name__)

IDLE_TIMEOUT = 10.0
ACTIVE_TIMEOUT = 30.0
MAX_PACKETS = 50


def flow_key_for(pkt: PacketRecord) -> FlowKey:
    """Device-centric key; a reply maps onto its request's key."""
    if pkt.originated:
        return FlowKey(pkt.src_ip, pkt.dst_ip, pkt.src_port, pkt.dst_port, pkt.transport)
    return FlowKey(pkt.dst_ip, pkt.src_ip, pkt.dst_port, pkt.src_port, pkt.transport)


@dataclass
class _Segment:
    key: FlowKey
    device_id: int
    start_time: float
    last_seen: float
    continuation_index: int
    bytes_out: int = 0
    bytes_in: int = 0
    pkts_out: int = 0
    pkts_in: int = 0
    sizes: List[int] = field(default_factory=list)
    times: List[float] = field(default_factory=list)


class FlowTable:
    """5-tuple flow table exporting segments on idle (> 10 s) or active (> 30 s) timeouts.

    Timeouts are evaluated lazily when the next packet of a flow arrives or on
    flush. A single table has one writer.
    """

    def __init__(self, *, domain_map: Optional[DomainMap] = None, idle_timeout: float = IDLE_TIMEOUT,
                 active_timeout: float = ACTIVE_TIMEOUT, max_packets: int = MAX_PACKETS):
        self.domain_map = domain_map
        self.idle_timeout = idle_timeout
        self.active_timeout = active_timeout
        self.max_packets = max_packets
        self._open: Dict[Tuple[int, FlowKey], _Segment] = {}
        self._next_index: Dict[Tuple[int, FlowKey], int] = {}

    def __len__(self) -> int:
        return len(self._open)

    def advance(self, device_id: int, pkt: PacketRecord) -> List[FlowRecord]:
        if pkt.transport == Transport.OTHER:
            raise ValueError("flow table accepts TCP/UDP packets only")
        key = flow_key_for(pkt)
        slot = (device_id, key)
        exported: List[FlowRecord] = []

        seg = self._open.get(slot)
        if seg is not None and (
            pkt.timestamp - seg.last_seen > self.idle_timeout
            or pkt.timestamp - seg.start_time > self.active_timeout
        ):
            exported.append(self._export(slot))
            seg = None
        if seg is None:
            index = self._next_index.get(slot, 0)
            seg = _Segment(key=key, device_id=device_id, start_time=pkt.timestamp,
                           last_seen=pkt.timestamp, continuation_index=index)
            self._open[slot] = seg
            self._next_index[slot] = index + 1

        if pkt.originated:
            seg.bytes_out += pkt.wire_len
            seg.pkts_out += 1
        else:
            seg.bytes_in += pkt.wire_len
            seg.pkts_in += 1
        if len(seg.sizes) < self.max_packets:
            seg.sizes.append(pkt.wire_len)
            seg.times.append(pkt.timestamp)
        seg.last_seen = max(seg.last_seen, pkt.timestamp)
        return exported

    def flush(self) -> List[FlowRecord]:
        slots = sorted(self._open, key=lambda s: (self._open[s].start_time, s[0], _key_order(s[1])))
        return [self._export(slot) for slot in slots]

    def _export(self, slot: Tuple[int, FlowKey]) -> FlowRecord:
        seg = self._open.pop(slot)
        domain = ""
        if self.domain_map is not None:
            domain = self.domain_map.resolve(seg.device_id, seg.key.dst_ip, seg.start_time)
        return FlowRecord(
            key=seg.key,
            device_id=seg.device_id,
            start_time=seg.start_time,
            end_time=seg.last_seen,
            bytes_out=seg.bytes_out,
            bytes_in=seg.bytes_in,
            pkts_out=seg.pkts_out,
            pkts_in=seg.pkts_in,
            pkt_sizes=list(seg.sizes),
            pkt_times=list(seg.times),
            remote_domain=domain,
            continuation_index=seg.continuation_index,
        )


def _key_order(key: FlowKey) -> Tuple:
    return (key.src_ip, key.dst_ip, key.src_port, key.dst_port, int(key.transport))


def advance(packet: Tuple[int, PacketRecord], table: FlowTable) -> List[FlowRecord]:
    device_id, pkt = packet
    return table.advance(device_id, pkt)


def flush(table: FlowTable) -> List[FlowRecord]:
    return table.flush()


def segment_flows(packets: Iterable[Tuple[int, PacketRecord]], *,
                  domain_map: Optional[DomainMap] = None, idle_timeout: float = IDLE_TIMEOUT,
                  active_timeout: float = ACTIVE_TIMEOUT, max_packets: int = MAX_PACKETS) -> List[FlowRecord]:
    """Run a whole packet stream through a fresh table; OTHER transport is skipped."""
    table = FlowTable(domain_map=domain_map, idle_timeout=idle_timeout,
                      active_timeout=active_timeout, max_packets=max_packets)
    records: List[FlowRecord] = []
    for device_id, pkt in packets:
        if pkt.transport == Transport.OTHER:
            continue
        records.extend(table.advance(device_id, pkt))
    records.extend(table.flush())
    logger.debug("segmented %d flow records", len(records))
    return records
