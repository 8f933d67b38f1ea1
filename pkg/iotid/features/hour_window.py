from __future__ import annotations

from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..core.types import (
    DnsObservation,
    FlowRecord,
    HourWindowRow,
    PacketRecord,
    TlsClientHelloObservation,
    Transport,
)
from ..flows.domain_map import DomainMap

WINDOW = 3600.0
DNS_PORT = 53
NTP_PORT = 123


def hour_of(ts: float) -> float:
    return float(np.floor(ts / WINDOW) * WINDOW)


def _mean_gap(times: Sequence[float]) -> float:
    if len(times) < 2:
        return 0.0
    return float(np.mean(np.diff(np.sort(np.asarray(times, dtype=np.float64)))))


def _sleep_time(times: Sequence[float], start: float) -> float:
    """Longest silence in the window, counting the stretches to both window edges."""
    edges = np.concatenate(([start], np.sort(np.asarray(times, dtype=np.float64)), [start + WINDOW]))
    return float(np.clip(np.max(np.diff(edges)), 0.0, WINDOW))


def _requests_to(pkt: PacketRecord, port: int) -> bool:
    return pkt.originated and pkt.transport == Transport.UDP and pkt.dst_port == port


def extract_hour_window(device_id: int, packets: Iterable[PacketRecord], flows: Iterable[FlowRecord],
                        dns: Iterable[DnsObservation] = (),
                        tls: Iterable[TlsClientHelloObservation] = ()) -> List[HourWindowRow]:
    """Hour-window rows for one device, one per wall-clock hour with traffic."""
    packet_times: Dict[float, List[float]] = defaultdict(list)
    dns_times: Dict[float, List[float]] = defaultdict(list)
    ntp_times: Dict[float, List[float]] = defaultdict(list)
    for pkt in packets:
        hour = hour_of(pkt.timestamp)
        packet_times[hour].append(pkt.timestamp)
        if _requests_to(pkt, DNS_PORT):
            dns_times[hour].append(pkt.timestamp)
        elif _requests_to(pkt, NTP_PORT):
            ntp_times[hour].append(pkt.timestamp)

    domain_map: Optional[DomainMap] = None
    dns = list(dns)
    if dns:
        domain_map = DomainMap.from_observations(o for o in dns if o.device_id == device_id)

    segments: Dict[float, List[FlowRecord]] = defaultdict(list)
    for flow in flows:
        if flow.device_id == device_id:
            segments[hour_of(flow.start_time)].append(flow)

    ciphers: Dict[float, List[int]] = defaultdict(list)
    for obs in tls:
        if obs.device_id == device_id:
            ciphers[hour_of(obs.timestamp)].extend(obs.cipher_suites)

    rows: List[HourWindowRow] = []
    for hour in sorted(packet_times):
        hour_flows = segments.get(hour, [])
        domains: List[str] = []
        for flow in hour_flows:
            domain = flow.remote_domain
            if not domain and domain_map is not None:
                domain = domain_map.resolve(device_id, flow.key.dst_ip, flow.start_time)
            if domain:
                domains.append(domain)
        volume = float(sum(f.bytes_out + f.bytes_in for f in hour_flows))
        rows.append(HourWindowRow(
            device_id=device_id,
            window_start=hour,
            bag_of_ports=sorted(f.key.dst_port for f in hour_flows),
            bag_of_domains=sorted(domains),
            bag_of_ciphers=sorted(ciphers.get(hour, [])),
            flow_volume=volume,
            flow_duration=float(np.mean([f.duration for f in hour_flows])) if hour_flows else 0.0,
            flow_rate=volume / WINDOW,
            sleep_time=_sleep_time(packet_times[hour], hour),
            dns_interval=_mean_gap(dns_times.get(hour, [])),
            ntp_interval=_mean_gap(ntp_times.get(hour, [])),
        ))
    return rows
