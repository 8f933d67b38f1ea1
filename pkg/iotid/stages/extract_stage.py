from __future__ import annotations

import logging
import os
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

from ..capture.manifest import load_manifest, save_manifest
from ..core.types import FlowRecord, PacketRecord, Settings
from ..features.flow_features import extract_all_flow_features
from ..features.hour_window import extract_hour_window
from ..features.packet_grid import build_packet_grids
from ..features.second_window import extract_second_window
from ..features.store import (
    DNS_FILE,
    FLOWS_FILE,
    GRIDS_FILE,
    PACKETS_FILE,
    SCHEMAS,
    TLS_FILE,
    read_dns,
    read_packets,
    read_tls,
    schema_info,
    write_feature_rows,
    write_flows,
    write_grids,
)
from ..flows.domain_map import DomainMap
from ..flows.flow_table import segment_flows
from .ingest_stage import MANIFEST_FILE
from .outputs import claim_outputs

logger = logging.getLogger(__name__)

SCHEMA_ORDER = ("hour", "second", "grid", "flow")


def _outputs_of(store_dir: str, schema: str) -> List[str]:
    paths = [os.path.join(store_dir, schema_info(schema).file_name)]
    if schema == "grid":
        paths.append(os.path.join(store_dir, GRIDS_FILE))
    return paths


def _hour_rows(packets, flows: Sequence[FlowRecord], dns, tls) -> List:
    by_device: Dict[int, List[PacketRecord]] = defaultdict(list)
    for device_id, pkt in packets:
        by_device[device_id].append(pkt)
    rows = []
    for device_id in sorted(by_device):
        rows.extend(extract_hour_window(device_id, by_device[device_id], flows, dns, tls))
    return rows


def extract(store_dir: str, schemas: Optional[Sequence[str]] = None, *, settings: Optional[Settings] = None,
            force: bool = False, out_dir: Optional[str] = None) -> Dict[str, int]:
    """Write the feature files of ``schemas`` (all four by default).

    Files land next to the ingest stores unless ``out_dir`` names another directory; that
    directory also receives a copy of the manifest so it can serve as a store for train and evaluate.
    """
    settings = settings or Settings()
    out_dir = out_dir or store_dir
    selected = list(schemas) if schemas else list(SCHEMA_ORDER)
    for name in selected:
        schema_info(name)
    separate = os.path.abspath(out_dir) != os.path.abspath(store_dir)
    targets = [p for name in selected for p in _outputs_of(out_dir, name)]
    if separate:
        targets.append(os.path.join(out_dir, MANIFEST_FILE))
    claim_outputs(targets, force)

    packets = list(read_packets(os.path.join(store_dir, PACKETS_FILE)))
    dns = read_dns(os.path.join(store_dir, DNS_FILE))
    tls = read_tls(os.path.join(store_dir, TLS_FILE))
    domain_map = DomainMap.from_observations(dns)

    flows: List[FlowRecord] = []
    if {"hour", "flow"} & set(selected):
        flows = segment_flows(packets, domain_map=domain_map, idle_timeout=settings.flow.idle_timeout,
                              active_timeout=settings.flow.active_timeout,
                              max_packets=settings.flow.max_packets)
        write_flows(flows, os.path.join(out_dir, FLOWS_FILE))
        logger.info("%d flow segments", len(flows))

    counts: Dict[str, int] = {}
    for name in selected:
        path = os.path.join(out_dir, SCHEMAS[name].file_name)
        if name == "flow":
            counts[name] = write_feature_rows(name, extract_all_flow_features(flows, domain_map), path)
        elif name == "second":
            counts[name] = write_feature_rows(name, extract_second_window(packets), path)
        elif name == "hour":
            counts[name] = write_feature_rows(name, _hour_rows(packets, flows, dns, tls), path)
        else:
            grids = build_packet_grids(packets, rows=settings.grid.rows, cols=settings.grid.cols)
            counts[name] = write_grids(grids, os.path.join(out_dir, GRIDS_FILE), path)
        print(f"{name}: {counts[name]} rows")
    if separate:
        save_manifest(load_manifest(os.path.join(store_dir, MANIFEST_FILE)), os.path.join(out_dir, MANIFEST_FILE))
    return counts
