"""Flat-file stores shared by the ingest, extract, train and evaluate commands.

Every table is a headered CSV written with pandas. Packet grids go to a binary
file of consecutive rows*cols byte records plus an index CSV.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..capture.manifest import mac_to_bytes, mac_to_str
from ..core.errors import DataError, UsageError
from ..core.types import (
    DnsObservation,
    FlowFeatureRow,
    FlowKey,
    FlowRecord,
    HourWindowRow,
    PacketGrid,
    PacketRecord,
    SecondWindowRow,
    TlsClientHelloObservation,
    Transport,
)
from ..flows.flow_table import MAX_PACKETS
from ..utils.jsonio import write_bytes_atomic
from .packet_grid import GRID_COLS, GRID_ROWS

PACKETS_FILE = "packets.csv"
DNS_FILE = "dns.csv"
TLS_FILE = "tls.csv"
FLOWS_FILE = "flows.csv"
GRIDS_FILE = "grids.bin"
HEAD_BYTES = GRID_COLS

PACKET_COLUMNS = [
    "device_id", "timestamp", "originated", "src_mac", "dst_mac", "src_ip", "dst_ip",
    "src_port", "dst_port", "transport", "wire_len", "head_hex",
]
# one column per packet slot; unused slots are empty cells
FLOW_SLOTS = MAX_PACKETS
SIZE_COLUMNS = [f"size_{i}" for i in range(1, FLOW_SLOTS + 1)]
TIME_COLUMNS = [f"time_{i}" for i in range(1, FLOW_SLOTS + 1)]
FLOW_COLUMNS = [
    "device_id", "src_ip", "dst_ip", "src_port", "dst_port", "transport", "start_time", "end_time",
    "bytes_out", "bytes_in", "pkts_out", "pkts_in", "remote_domain", "continuation_index",
    *SIZE_COLUMNS, *TIME_COLUMNS,
]
KEY_COLUMNS = ["src_ip", "dst_ip", "src_port", "dst_port", "transport"]


@dataclass(frozen=True)
class SchemaInfo:
    name: str
    file_name: str
    # column used for week assignment
    time_column: str
    columns: Tuple[str, ...]


def _columns(row_type: type) -> Tuple[str, ...]:
    return tuple(f.name for f in fields(row_type))


SCHEMAS: Dict[str, SchemaInfo] = {
    "hour": SchemaInfo("hour", "hour_windows.csv", "window_start", _columns(HourWindowRow)),
    "second": SchemaInfo("second", "second_windows.csv", "second_start", _columns(SecondWindowRow)),
    "flow": SchemaInfo("flow", "flow_features.csv", "start_time", _columns(FlowFeatureRow)),
    "grid": SchemaInfo("grid", "grids_index.csv", "start_time",
                       ("device_id", *KEY_COLUMNS, "start_time", "offset")),
}
BAG_COLUMNS = ("bag_of_ports", "bag_of_domains", "bag_of_ciphers")


def schema_info(name: str) -> SchemaInfo:
    try:
        return SCHEMAS[name]
    except KeyError:
        valid = ", ".join(sorted(SCHEMAS))
        raise UsageError(f"unknown schema '{name}' (valid schemas: {valid})") from None


def _join(values: Iterable) -> str:
    return " ".join(repr(v) if isinstance(v, float) else str(v) for v in values)


def _split(text: str) -> List[str]:
    return str(text).split()


def _read_csv(path: str, what: str, **kwargs) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError(f"{what} not found: {path}")
    return pd.read_csv(path, keep_default_na=False, **kwargs)


def _write_csv(df: pd.DataFrame, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    df.to_csv(path, index=False)


def _key_fields(key: FlowKey) -> Dict[str, object]:
    return {
        "src_ip": key.src_ip,
        "dst_ip": key.dst_ip,
        "src_port": key.src_port,
        "dst_port": key.dst_port,
        "transport": int(key.transport),
    }


def _key_from(row) -> FlowKey:
    return FlowKey(str(row.src_ip), str(row.dst_ip), int(row.src_port), int(row.dst_port),
                   Transport(int(row.transport)))


# --- ingest stores -----------------------------------------------------------

def write_packets(packets: Iterable[Tuple[int, PacketRecord]], path: str) -> int:
    rows = [
        {
            "device_id": device_id,
            "timestamp": p.timestamp,
            "originated": int(p.originated),
            "src_mac": mac_to_str(p.src_mac),
            "dst_mac": mac_to_str(p.dst_mac),
            "src_ip": p.src_ip,
            "dst_ip": p.dst_ip,
            "src_port": p.src_port,
            "dst_port": p.dst_port,
            "transport": int(p.transport),
            "wire_len": p.wire_len,
            "head_hex": p.data[:HEAD_BYTES].hex(),
        }
        for device_id, p in packets
    ]
    _write_csv(pd.DataFrame(rows, columns=PACKET_COLUMNS), path)
    return len(rows)


def read_packets(path: str) -> Iterator[Tuple[int, PacketRecord]]:
    """Packets stored by ``write_packets``; ``data`` holds only the stored frame head."""
    df = _read_csv(path, "packet store")
    for r in df.itertuples(index=False):
        yield int(r.device_id), PacketRecord(
            timestamp=float(r.timestamp),
            src_mac=mac_to_bytes(str(r.src_mac)),
            dst_mac=mac_to_bytes(str(r.dst_mac)),
            src_ip=str(r.src_ip),
            dst_ip=str(r.dst_ip),
            src_port=int(r.src_port),
            dst_port=int(r.dst_port),
            transport=Transport(int(r.transport)),
            wire_len=int(r.wire_len),
            data=bytes.fromhex(str(r.head_hex)),
            originated=bool(int(r.originated)),
        )


def write_dns(observations: Sequence[DnsObservation], path: str) -> int:
    df = pd.DataFrame([asdict(o) for o in observations],
                      columns=["timestamp", "queried_name", "resolved_ip", "device_id"])
    _write_csv(df, path)
    return len(df)


def read_dns(path: str) -> List[DnsObservation]:
    df = _read_csv(path, "DNS store")
    return [
        DnsObservation(float(r.timestamp), str(r.queried_name), str(r.resolved_ip), int(r.device_id))
        for r in df.itertuples(index=False)
    ]


def write_tls(observations: Sequence[TlsClientHelloObservation], path: str) -> int:
    df = pd.DataFrame(
        [{"timestamp": o.timestamp, "device_id": o.device_id, "cipher_suites": _join(o.cipher_suites)}
         for o in observations],
        columns=["timestamp", "device_id", "cipher_suites"],
    )
    _write_csv(df, path)
    return len(df)


def read_tls(path: str) -> List[TlsClientHelloObservation]:
    df = _read_csv(path, "TLS store")
    return [
        TlsClientHelloObservation(float(r.timestamp), int(r.device_id),
                                  tuple(int(s) for s in _split(r.cipher_suites)))
        for r in df.itertuples(index=False)
    ]


# --- flow records ------------------------------------------------------------

def _slots(values: Sequence, columns: Sequence[str]) -> Dict[str, str]:
    if len(values) > len(columns):
        raise DataError(f"flow carries {len(values)} packets, the flow store holds {len(columns)}")
    cells = [repr(v) if isinstance(v, float) else str(v) for v in values]
    return dict(zip(columns, cells + [""] * (len(columns) - len(cells))))


def _filled(row, columns: Sequence[str]) -> List[str]:
    """Slot values up to the first empty cell."""
    values: List[str] = []
    for column in columns:
        cell = getattr(row, column)
        if cell == "":
            break
        values.append(cell)
    return values


def write_flows(flows: Sequence[FlowRecord], path: str) -> int:
    """One row per flow: key and counters, then size_1..size_N and time_1..time_N."""
    rows = []
    for f in flows:
        row = {"device_id": f.device_id, **_key_fields(f.key)}
        row.update(
            start_time=repr(f.start_time), end_time=repr(f.end_time), bytes_out=f.bytes_out,
            bytes_in=f.bytes_in, pkts_out=f.pkts_out, pkts_in=f.pkts_in, remote_domain=f.remote_domain,
            continuation_index=f.continuation_index,
        )
        row.update(_slots(f.pkt_sizes, SIZE_COLUMNS))
        row.update(_slots([float(t) for t in f.pkt_times], TIME_COLUMNS))
        rows.append(row)
    _write_csv(pd.DataFrame(rows, columns=FLOW_COLUMNS), path)
    return len(rows)


def read_flows(path: str) -> List[FlowRecord]:
    df = _read_csv(path, "flow store", dtype=str)
    missing = [c for c in FLOW_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"{path} lacks columns: {', '.join(missing)}")
    return [
        FlowRecord(
            key=_key_from(r),
            device_id=int(r.device_id),
            start_time=float(r.start_time),
            end_time=float(r.end_time),
            bytes_out=int(r.bytes_out),
            bytes_in=int(r.bytes_in),
            pkts_out=int(r.pkts_out),
            pkts_in=int(r.pkts_in),
            pkt_sizes=[int(s) for s in _filled(r, SIZE_COLUMNS)],
            pkt_times=[float(t) for t in _filled(r, TIME_COLUMNS)],
            remote_domain=str(r.remote_domain),
            continuation_index=int(r.continuation_index),
        )
        for r in df.itertuples(index=False)
    ]


# --- feature schemas ---------------------------------------------------------

def write_feature_rows(schema: str, rows: Sequence, path: str) -> int:
    info = schema_info(schema)
    records = []
    for row in rows:
        record = asdict(row)
        for bag in BAG_COLUMNS:
            if bag in record:
                record[bag] = _join(record[bag])
        records.append(record)
    _write_csv(pd.DataFrame(records, columns=list(info.columns)), path)
    return len(records)


def write_grids(grids: Sequence[PacketGrid], bin_path: str, index_path: str) -> int:
    index = []
    blob = bytearray()
    for g in grids:
        index.append({"device_id": g.device_id, **_key_fields(g.key), "start_time": g.start_time,
                      "offset": len(blob)})
        blob.extend(np.ascontiguousarray(g.cells, dtype=np.uint8).tobytes())
    write_bytes_atomic(bytes(blob), bin_path)
    _write_csv(pd.DataFrame(index, columns=list(SCHEMAS["grid"].columns)), index_path)
    return len(index)


def read_grids(bin_path: str, index_path: str, *, rows: int = GRID_ROWS,
               cols: int = GRID_COLS) -> Tuple[pd.DataFrame, np.ndarray]:
    """Index frame plus a (n, rows, cols) uint8 array aligned with it."""
    index = _read_csv(index_path, "grid index")
    if not os.path.exists(bin_path):
        raise DataError(f"grid file not found: {bin_path}")
    raw = np.fromfile(bin_path, dtype=np.uint8)
    record = rows * cols
    if raw.size % record:
        raise DataError(f"grid file {bin_path} is not a whole number of {record}-byte records")
    cells = raw.reshape(-1, rows, cols)
    offsets = index["offset"].to_numpy(dtype=np.int64) // record if len(index) else np.zeros(0, np.int64)
    if len(offsets) and offsets.max() >= len(cells):
        raise DataError(f"grid index {index_path} points past the end of {bin_path}")
    return index, cells[offsets]


def load_feature_frame(store_dir: str, schema: str, *, rows: int = GRID_ROWS,
                       cols: int = GRID_COLS) -> Tuple[pd.DataFrame, Optional[np.ndarray]]:
    """Load one schema's rows; grids also return their cell array."""
    info = schema_info(schema)
    path = os.path.join(store_dir, info.file_name)
    if schema == "grid":
        return read_grids(os.path.join(store_dir, GRIDS_FILE), path, rows=rows, cols=cols)
    df = _read_csv(path, f"{schema} feature file")
    missing = [c for c in info.columns if c not in df.columns]
    if missing:
        raise DataError(f"{path} lacks columns: {', '.join(missing)}")
    for bag in BAG_COLUMNS:
        if bag in df.columns:
            df[bag] = df[bag].astype(str)
    if "domain" in df.columns:
        df["domain"] = df["domain"].astype(str)
    return df, None


def parse_bag(text: str) -> List[str]:
    return _split(text)
