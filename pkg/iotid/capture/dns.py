from __future__ import annotations

import logging
import struct
from typing import Dict, Iterable, List, Optional, Tuple

import dpkt
from dpkt.utils import inet_to_str

from ..core.types import CaptureStats, DnsObservation, PacketRecord, Transport

logger = logging.getLogger(__name__)

DNS_PORT = 53
_MAX_CNAME_HOPS = 16


def _chain_names(start: str, cnames: Dict[str, str]) -> List[str]:
    names = [start]
    current = start
    for _ in range(_MAX_CNAME_HOPS):
        nxt = cnames.get(current)
        if nxt is None or nxt in names:
            break
        names.append(nxt)
        current = nxt
    return names


def parse_dns_response(payload: bytes) -> Optional[List[Tuple[str, str]]]:
    """Return (queried_name, ipv4) pairs for a DNS response, [] for non-responses.

    CNAME chains are followed so each address maps back to the name that was
    asked for. Returns None when the payload does not decode.
    """
    try:
        msg = dpkt.dns.DNS(payload)
    except (dpkt.UnpackError, dpkt.NeedData, IndexError, ValueError, struct.error):
        return None
    if msg.qr != dpkt.dns.DNS_R:
        return []

    questions = [q.name.lower().rstrip(".") for q in msg.qd if q.name]
    cnames: Dict[str, str] = {}
    a_records: List[Tuple[str, str]] = []
    for rr in msg.an:
        owner = rr.name.lower().rstrip(".")
        if rr.type == dpkt.dns.DNS_CNAME:
            cnames[owner] = rr.cname.lower().rstrip(".")
        elif rr.type == dpkt.dns.DNS_A and len(rr.ip) == 4:
            a_records.append((owner, inet_to_str(rr.ip)))

    chains = {q: _chain_names(q, cnames) for q in questions}
    pairs: List[Tuple[str, str]] = []
    for owner, address in a_records:
        queried = next((q for q, chain in chains.items() if owner in chain), owner)
        if queried:
            pairs.append((queried, address))
    return pairs


def extract_dns(packets: Iterable[Tuple[int, PacketRecord]],
                stats: Optional[CaptureStats] = None) -> List[DnsObservation]:
    stats = stats if stats is not None else CaptureStats()
    observations: List[DnsObservation] = []
    for device_id, pkt in packets:
        if pkt.transport != Transport.UDP or DNS_PORT not in (pkt.src_port, pkt.dst_port):
            continue
        pairs = parse_dns_response(pkt.payload)
        if pairs is None:
            stats.malformed_dns += 1
            logger.debug("malformed DNS payload at %.6f", pkt.timestamp)
            continue
        for name, address in pairs:
            observations.append(DnsObservation(
                timestamp=pkt.timestamp,
                queried_name=name,
                resolved_ip=address,
                device_id=device_id,
            ))
    return observations
