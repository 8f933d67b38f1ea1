from __future__ import annotations

from bisect import bisect_right
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Tuple

from ..core.types import DnsObservation


def sld_of(fqdn: str) -> str:
    """Second+top-level domain: the last two labels of a dotted name."""
    labels = [label for label in fqdn.strip().rstrip(".").lower().split(".") if label]
    if len(labels) <= 2:
        return ".".join(labels)
    return ".".join(labels[-2:])


class DomainMap:
    """Per-device IP -> SLD history built from DNS answers; most recent wins."""

    def __init__(self) -> None:
        self._history: Dict[int, Dict[str, List[Tuple[float, int, str]]]] = defaultdict(dict)
        self._seq = 0

    @classmethod
    def from_observations(cls, observations: Iterable[DnsObservation]) -> "DomainMap":
        dm = cls()
        for obs in observations:
            dm.observe(obs)
        return dm

    def observe(self, obs: DnsObservation) -> None:
        entries = self._history[obs.device_id].setdefault(obs.resolved_ip, [])
        # sequence number keeps insertion order stable for equal timestamps
        entries.append((obs.timestamp, self._seq, sld_of(obs.queried_name)))
        self._seq += 1
        if len(entries) > 1 and entries[-2][:2] > entries[-1][:2]:
            entries.sort()

    def resolve(self, device_id: int, remote_ip: str, at_time: Optional[float] = None) -> str:
        entries = self._history.get(device_id, {}).get(remote_ip)
        if not entries:
            return ""
        if at_time is None:
            return entries[-1][2]
        idx = bisect_right(entries, (at_time, float("inf"), ""))
        return entries[idx - 1][2] if idx > 0 else ""

    def domains(self) -> List[str]:
        return sorted({sld for per_ip in self._history.values() for ent in per_ip.values() for _, _, sld in ent})


def resolve_domain(domain_map: DomainMap, device_id: int, remote_ip: str,
                   at_time: Optional[float] = None) -> str:
    return domain_map.resolve(device_id, remote_ip, at_time)
