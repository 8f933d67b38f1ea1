from __future__ import annotations

import logging
import os
from dataclasses import asdict
from typing import Dict, List, Sequence, Tuple

from ..capture.dns import extract_dns
from ..capture.manifest import load_manifest, save_manifest
from ..capture.pcap_reader import parse_pcap
from ..capture.tls import extract_tls_ciphers
from ..core.errors import DataError
from ..core.types import CaptureStats, DeviceManifest, PacketRecord
from ..features.store import DNS_FILE, PACKETS_FILE, TLS_FILE, write_dns, write_packets, write_tls
from ..utils.jsonio import save_json_atomic
from ..utils.log import progress
from .outputs import claim_outputs

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "ingest_summary.json"


def read_captures(pcap_paths: Sequence[str], manifest: DeviceManifest,
                  stats: CaptureStats) -> List[Tuple[int, PacketRecord]]:
    """Decode every capture; packets from several files are merged in time order."""
    packets: List[Tuple[int, PacketRecord]] = []
    for path in pcap_paths:
        if not os.path.exists(path):
            raise DataError(f"capture not found: {path}")
        with open(path, "rb") as f:
            packets.extend(progress(parse_pcap(f, manifest, stats), desc=os.path.basename(path)))
    if len(pcap_paths) > 1:
        packets.sort(key=lambda item: item[1].timestamp)
    return packets


def ingest(pcap_paths: Sequence[str], manifest_path: str, out_dir: str, *, force: bool = False) -> CaptureStats:
    """Decode captures into the packet, DNS and TLS stores under ``out_dir``."""
    manifest = load_manifest(manifest_path)
    targets = [os.path.join(out_dir, name)
               for name in (PACKETS_FILE, DNS_FILE, TLS_FILE, MANIFEST_FILE, SUMMARY_FILE)]
    claim_outputs(targets, force)

    stats = CaptureStats()
    packets = read_captures(pcap_paths, manifest, stats)
    dns = extract_dns(packets, stats)
    tls = extract_tls_ciphers(packets, stats)

    write_packets(packets, targets[0])
    write_dns(dns, targets[1])
    write_tls(tls, targets[2])
    save_manifest(manifest, targets[3])

    byte_totals: Dict[int, int] = {}
    for device_id, pkt in packets:
        byte_totals[device_id] = byte_totals.get(device_id, 0) + pkt.wire_len
    summary = asdict(stats)
    summary["per_device"] = {str(k): v for k, v in sorted(stats.per_device.items())}
    summary["per_device_bytes"] = {str(k): v for k, v in sorted(byte_totals.items())}
    summary["dns_observations"] = len(dns)
    summary["tls_client_hellos"] = len(tls)
    save_json_atomic(summary, targets[4])
    logger.info("ingested %d of %d records (%d unknown MAC, %d non-IPv4, %d malformed)",
                stats.emitted, stats.total_records, stats.skipped_unknown_mac,
                stats.skipped_non_ipv4, stats.malformed_packets)

    print(f"{stats.emitted} packets")
    for entry in manifest.entries:
        print(f"  device {entry.device_id} ({entry.name}): {stats.per_device.get(entry.device_id, 0)} packets")
    return stats
