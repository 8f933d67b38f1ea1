from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..capture.manifest import mac_to_bytes
from ..capture.pcap_reader import timestamp_from_parts
from ..core.errors import ScenarioError
from ..core.types import DeviceManifest, DeviceProfile, DriftEvent, ManifestEntry, Scenario
from .frames import (
    DNS_PORT,
    GATEWAY_MAC,
    MAX_FRAME,
    MIN_FRAME,
    NTP_PORT,
    NTP_SERVER_IP,
    RESOLVER_IP,
    client_hello,
    dns_query,
    dns_response,
    header_len,
    ntp_packet,
    pattern,
    tcp_frame,
    udp_frame,
)
from .pcap_writer import PcapWriter
from .profiles import DEFAULT_START, apply_drift, device_ip, validate_drift, validate_profiles

logger = logging.getLogger(__name__)

US = 1_000_000
WEEK_US = 604800 * US
DNS_ANSWER_DELAY_US = 10_000
NTP_ANSWER_DELAY_US = 20_000
# flows start no later than this before the end so their packets stay inside the span
TAIL_US = 600 * US

Emission = Tuple[int, int, int, bytes]


@dataclass
class SynthResult:
    pcap: bytes
    manifest: DeviceManifest
    # one row per packet: timestamp, device_id, wire_len
    labels: pd.DataFrame


@lru_cache(maxsize=256)
def _filler(endpoint: str) -> bytes:
    return pattern(endpoint, MAX_FRAME)


class _DeviceTraffic:
    """Packet emissions of one device over the whole scenario span."""

    def __init__(self, profile: DeviceProfile, drift: Sequence[DriftEvent], rng: np.random.Generator,
                 start_us: int, end_us: int):
        self.base = profile
        self.drift = drift
        self.rng = rng
        self.start_us = start_us
        self.end_us = end_us
        self.mac = mac_to_bytes(profile.mac)
        self.gateway = mac_to_bytes(GATEWAY_MAC)
        self.ip = device_ip(profile.device_id)
        self.emissions: List[Emission] = []
        self._ip_id = int(rng.integers(0, 65536))

    def _emit(self, t_us: int, frame: bytes) -> None:
        self.emissions.append((t_us, self.base.device_id, len(self.emissions), frame))
        self._ip_id += 1

    def profile_at(self, t_us: int) -> DeviceProfile:
        week = 1 + (t_us - self.start_us) // WEEK_US
        return apply_drift(self.base, self.drift, int(week))

    def _size(self, p: DeviceProfile) -> int:
        mean, std = p.packet_size_distribution
        return int(np.clip(round(self.rng.normal(mean, std)), MIN_FRAME, MAX_FRAME))

    def _gap_us(self, p: DeviceProfile) -> int:
        mean, std = p.inter_packet_gap
        return max(1000, int(round(self.rng.normal(mean, std) * US)))

    def _dns(self, t_us: int, domain: str, address: str) -> None:
        qid = int(self.rng.integers(0, 65536))
        sport = int(self.rng.integers(49152, 65536))
        self._emit(t_us, udp_frame(self.mac, self.gateway, self.ip, RESOLVER_IP, sport, DNS_PORT,
                                   dns_query(qid, domain), self._ip_id))
        self._emit(t_us + DNS_ANSWER_DELAY_US,
                   udp_frame(self.gateway, self.mac, RESOLVER_IP, self.ip, DNS_PORT, sport,
                             dns_response(qid, domain, address), self._ip_id))

    def flow(self, t_us: int) -> None:
        p = self.profile_at(t_us)
        domain, address, port, proto = p.remote_endpoints[int(self.rng.integers(len(p.remote_endpoints)))]
        if p.dns_before_flow:
            self._dns(t_us, domain, address)
            t_us += 2 * DNS_ANSWER_DELAY_US
        count = max(1, int(round(self.rng.normal(*p.packets_per_flow))))
        sport = int(self.rng.integers(49152, 65536))
        seq_out, seq_in = (int(s) for s in self.rng.integers(0, 2 ** 32, size=2))
        filler = _filler(f"{domain}:{port}")
        hdr = header_len(proto)
        for k in range(count):
            size = self._size(p)
            if k == 0 and proto == "tcp" and port == 443 and p.tls_cipher_suites:
                payload = client_hello(p.tls_cipher_suites, self.rng.bytes(32), pad_to=size - hdr)
            else:
                payload = filler[: max(0, size - hdr)]
            outbound = k % 2 == 0
            src_mac, dst_mac = (self.mac, self.gateway) if outbound else (self.gateway, self.mac)
            src_ip, dst_ip = (self.ip, address) if outbound else (address, self.ip)
            sp, dp = (sport, port) if outbound else (port, sport)
            if proto == "tcp":
                seq, ack = (seq_out, seq_in) if outbound else (seq_in, seq_out)
                frame = tcp_frame(src_mac, dst_mac, src_ip, dst_ip, sp, dp, payload, seq, ack, self._ip_id)
                if outbound:
                    seq_out += len(payload)
                else:
                    seq_in += len(payload)
            else:
                frame = udp_frame(src_mac, dst_mac, src_ip, dst_ip, sp, dp, payload, self._ip_id)
            self._emit(t_us, frame)
            t_us += self._gap_us(p)

    def ntp(self) -> None:
        period = self.base.ntp_period
        if not period:
            return
        t_us = self.start_us + int(self.rng.uniform(0, period) * US)
        while t_us < self.end_us - TAIL_US:
            sent = timestamp_from_parts(t_us // US, t_us % US)
            self._emit(t_us, udp_frame(self.mac, self.gateway, self.ip, NTP_SERVER_IP, NTP_PORT, NTP_PORT,
                                       ntp_packet(3, sent), self._ip_id))
            self._emit(t_us + NTP_ANSWER_DELAY_US,
                       udp_frame(self.gateway, self.mac, NTP_SERVER_IP, self.ip, NTP_PORT, NTP_PORT,
                                 ntp_packet(4, sent + 0.02), self._ip_id))
            t_us += int(period * US)

    def run(self) -> List[Emission]:
        t_us = self.start_us
        while True:
            rate = self.profile_at(t_us).flow_rate
            t_us += max(1, int(self.rng.exponential(3600.0 / rate) * US))
            if t_us >= self.end_us - TAIL_US:
                break
            self.flow(t_us)
        self.ntp()
        return self.emissions


def generate(profiles: Sequence[DeviceProfile], weeks: int, drift: Sequence[DriftEvent] = (), seed: int = 0,
             start_time: float = DEFAULT_START) -> SynthResult:
    """Seeded pcap, manifest and per-packet labels for the given device profiles."""
    if weeks < 1:
        raise ScenarioError("weeks must be at least 1")
    validate_profiles(profiles)
    validate_drift(drift, weeks, len(profiles))
    start_us = int(round(start_time * US))
    end_us = start_us + weeks * WEEK_US
    profiles = sorted(profiles, key=lambda p: p.device_id)
    seeds = np.random.SeedSequence(seed).spawn(len(profiles))

    emissions: List[Emission] = []
    for profile, seq in zip(profiles, seeds):
        traffic = _DeviceTraffic(profile, drift, np.random.default_rng(seq), start_us, end_us)
        emissions.extend(traffic.run())
        logger.info("device %d (%s): %d packets", profile.device_id, profile.name, len(traffic.emissions))
    emissions.sort(key=lambda e: (e[0], e[1], e[2]))

    buf = io.BytesIO()
    writer = PcapWriter(buf)
    rows = []
    for t_us, device_id, _, frame in emissions:
        writer.write(frame, t_us)
        rows.append((timestamp_from_parts(t_us // US, t_us % US), device_id, len(frame)))

    manifest = DeviceManifest([ManifestEntry(mac_to_bytes(p.mac), p.device_id, p.name) for p in profiles])
    labels = pd.DataFrame(rows, columns=["timestamp", "device_id", "wire_len"])
    return SynthResult(buf.getvalue(), manifest, labels)


def generate_scenario(scenario: Scenario, seed: Optional[int] = None) -> SynthResult:
    return generate(scenario.profiles, scenario.weeks, scenario.drift,
                    scenario.seed if seed is None else seed, scenario.start_time)
