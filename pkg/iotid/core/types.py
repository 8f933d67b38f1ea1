from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np


class Transport(IntEnum):
    """Transport protocol; values double as the IP protocol number."""

    OTHER = 0
    TCP = 6
    UDP = 17


SchemaName = Literal["hour", "second", "grid", "flow"]
ModelKind = Literal["nbm", "dt", "rf", "fcnn", "cnn", "two-stage"]


@dataclass(frozen=True)
class ManifestEntry:
    mac: bytes
    device_id: int
    name: str


@dataclass
class DeviceManifest:
    entries: List[ManifestEntry]

    def __post_init__(self) -> None:
        self._by_mac = {e.mac: e for e in self.entries}

    def device_for(self, mac: bytes) -> Optional[int]:
        entry = self._by_mac.get(mac)
        return entry.device_id if entry is not None else None

    @property
    def device_ids(self) -> List[int]:
        return sorted(e.device_id for e in self.entries)

    def name_of(self, device_id: int) -> str:
        for e in self.entries:
            if e.device_id == device_id:
                return e.name
        return str(device_id)


@dataclass(frozen=True)
class PacketRecord:
    timestamp: float
    src_mac: bytes
    dst_mac: bytes
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    transport: Transport
    wire_len: int
    data: bytes
    # transport payload; empty for OTHER
    payload: bytes = b""
    originated: bool = True


@dataclass(frozen=True)
class DnsObservation:
    timestamp: float
    queried_name: str
    resolved_ip: str
    device_id: int


@dataclass(frozen=True)
class TlsClientHelloObservation:
    timestamp: float
    device_id: int
    cipher_suites: Tuple[int, ...]


@dataclass
class CaptureStats:
    total_records: int = 0
    emitted: int = 0
    skipped_unknown_mac: int = 0
    skipped_non_ipv4: int = 0
    malformed_packets: int = 0
    malformed_dns: int = 0
    malformed_tls: int = 0
    per_device: Dict[int, int] = field(default_factory=dict)

    @property
    def skipped(self) -> int:
        return self.skipped_unknown_mac + self.skipped_non_ipv4


@dataclass(frozen=True)
class FlowKey:
    """Device-centric 5-tuple: src_* is always the device side."""

    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    transport: Transport


@dataclass
class FlowRecord:
    key: FlowKey
    device_id: int
    start_time: float
    end_time: float
    bytes_out: int = 0
    bytes_in: int = 0
    pkts_out: int = 0
    pkts_in: int = 0
    pkt_sizes: List[int] = field(default_factory=list)
    pkt_times: List[float] = field(default_factory=list)
    remote_domain: str = ""
    continuation_index: int = 0

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    @property
    def packet_count(self) -> int:
        return self.pkts_out + self.pkts_in


@dataclass
class HourWindowRow:
    device_id: int
    window_start: float
    bag_of_ports: List[int]
    bag_of_domains: List[str]
    bag_of_ciphers: List[int]
    flow_volume: float
    flow_duration: float
    flow_rate: float
    sleep_time: float
    dns_interval: float
    ntp_interval: float

    def numeric(self) -> List[float]:
        return [
            self.flow_volume,
            self.flow_duration,
            self.flow_rate,
            self.sleep_time,
            self.dns_interval,
            self.ntp_interval,
        ]


@dataclass
class SecondWindowRow:
    device_id: int
    second_start: float
    bytes_sum: float
    bytes_avg: float
    bytes_std: float


@dataclass
class PacketGrid:
    device_id: int
    key: FlowKey
    start_time: float
    cells: np.ndarray  # uint8, shape (rows, cols)


@dataclass
class FlowFeatureRow:
    device_id: int
    start_time: float
    src_port: int
    dest_port: int
    bytes_out: int
    bytes_in: int
    pkts_out: int
    pkts_in: int
    ipt_mean: float
    ipt_std: float
    ipt_var: float
    ipt_skew: float
    ipt_kurtosis: float
    b_mean: float
    b_std: float
    b_var: float
    b_skew: float
    b_kurtosis: float
    duration: float
    protocol: int
    domain: str


@dataclass(frozen=True)
class Prediction:
    class_index: int
    confidence: float


@dataclass(frozen=True)
class Period:
    label: str
    start_week: int
    end_week: int

    def contains(self, week: int) -> bool:
        return self.start_week <= week <= self.end_week


@dataclass
class PeriodSpec:
    periods: List[Period]
    week_origin: Optional[float] = None

    @property
    def last_week(self) -> int:
        return max(p.end_week for p in self.periods)

    def find(self, label: str) -> Period:
        for p in self.periods:
            if p.label == label:
                return p
        raise KeyError(label)


@dataclass
class EvalReport:
    model_kind: str
    schema: str
    period_label: str
    period_weeks: Tuple[int, int]
    seed: int
    weekly_macro_f1: Dict[int, float] = field(default_factory=dict)
    weekly_weighted_f1: Dict[int, float] = field(default_factory=dict)
    weekly_class_f1: Dict[int, Dict[int, float]] = field(default_factory=dict)
    weekly_support: Dict[int, int] = field(default_factory=dict)
    in_period_f1: Optional[float] = None
    out_period_f1: Optional[float] = None
    degradation_pp: Optional[float] = None


@dataclass
class DeviceProfile:
    device_id: int
    mac: str
    name: str
    category: str
    flow_rate: float
    remote_endpoints: List[Tuple[str, str, int, str]]
    packet_size_distribution: Tuple[float, float]
    packets_per_flow: Tuple[float, float]
    inter_packet_gap: Tuple[float, float]
    dns_before_flow: bool = True
    tls_cipher_suites: List[int] = field(default_factory=list)
    ntp_period: Optional[float] = None


@dataclass(frozen=True)
class DriftEvent:
    at_week: int
    mutation: Literal["shift_sizes", "change_endpoints", "change_rate", "change_gap"]
    factor: float = 1.0
    endpoints: Tuple[Tuple[str, str, int, str], ...] = ()
    device_ids: Tuple[int, ...] = ()


@dataclass
class Scenario:
    profiles: List[DeviceProfile]
    weeks: int
    drift: List[DriftEvent]
    start_time: float
    seed: int = 0


@dataclass
class RunConfig:
    input_paths: List[str]
    output_dir: str
    manifest_path: Optional[str] = None
    schema: Optional[str] = None
    model_kind: Optional[str] = None
    periods: Optional[PeriodSpec] = None
    seed: int = 0
    workers: int = 1
    force: bool = False


@dataclass
class FlowSettings:
    idle_timeout: float = 10.0
    active_timeout: float = 30.0
    max_packets: int = 50


@dataclass
class GridSettings:
    rows: int = 10
    cols: int = 250


@dataclass
class TreeSettings:
    n_trees: int = 100
    # "sqrt" → ceil(sqrt(d)); an integer fixes the count; None uses every feature
    max_features: Optional[object] = "sqrt"
    bootstrap: bool = True
    max_depth: Optional[int] = None
    workers: int = 1


@dataclass
class NetworkSettings:
    epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 0.01
    momentum: float = 0.9
    hidden: Tuple[int, ...] = (128, 64)
    filters: Tuple[int, ...] = (8, 16)
    kernel: int = 3
    dropout: float = 0.5
    validation_fraction: float = 0.1


@dataclass
class EvalSettings:
    train_fraction: float = 0.8
    periods: str = "P1:1-9,P2:10-18,P3:19-27"
    week_origin: Optional[float] = None


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass
class Settings:
    flow: FlowSettings = field(default_factory=FlowSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    tree: TreeSettings = field(default_factory=TreeSettings)
    network: NetworkSettings = field(default_factory=NetworkSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    seed: int = 0
    workers: int = field(default_factory=default_workers)


@dataclass
class ModelArtifact:
    kind: str
    schema: str
    class_count: int
    training_period: str
    period_weeks: Tuple[int, int]
    seed: int
    model_state: Dict
    encoder_state: Dict
    week_origin: Optional[float] = None
    history: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: Optional[int] = None
    format_version: int = 1
