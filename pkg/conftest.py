"""
Shared fixtures: scripted pcaps, packet records and small synthetic scenarios.
"""

import io
import os
import sys

import pytest

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from iotid.capture.manifest import mac_to_bytes
from iotid.core.types import DeviceManifest, ManifestEntry, PacketRecord, Transport
from iotid.synth.pcap_writer import PcapWriter

DEVICE_MACS = ["aa:bb:cc:dd:ee:01", "aa:bb:cc:dd:ee:02"]
GATEWAY = "02:aa:00:00:00:01"
STRANGER = "de:ad:be:ef:00:99"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full synthetic reproduction, enabled with IOTID_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.getenv("IOTID_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set IOTID_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def manifest():
    return DeviceManifest([ManifestEntry(mac_to_bytes(m), i, f"device-{i}") for i, m in enumerate(DEVICE_MACS)])


@pytest.fixture
def manifest_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(
        '[{"mac": "aa:bb:cc:dd:ee:01", "device_id": 0, "name": "camera"},'
        ' {"mac": "aa:bb:cc:dd:ee:02", "device_id": 1, "name": "plug"}]'
    )
    return str(path)


@pytest.fixture
def write_pcap():
    """Build pcap bytes from (timestamp_us, frame) pairs."""

    def _write(records):
        buf = io.BytesIO()
        writer = PcapWriter(buf)
        for t_us, frame in records:
            writer.write(frame, t_us)
        return buf.getvalue()

    return _write


@pytest.fixture
def packet():
    """PacketRecord factory for flow and feature tests."""

    def _packet(t, size=100, *, originated=True, sport=40000, dport=443, transport=Transport.TCP,
                device_ip="192.168.1.10", remote_ip="34.100.0.10", data=b""):
        src_ip, dst_ip = (device_ip, remote_ip) if originated else (remote_ip, device_ip)
        src_port, dst_port = (sport, dport) if originated else (dport, sport)
        return PacketRecord(
            timestamp=float(t),
            src_mac=mac_to_bytes(DEVICE_MACS[0] if originated else GATEWAY),
            dst_mac=mac_to_bytes(GATEWAY if originated else DEVICE_MACS[0]),
            src_ip=src_ip,
            dst_ip=dst_ip,
            src_port=src_port,
            dst_port=dst_port,
            transport=transport,
            wire_len=size,
            data=data or b"\x00" * size,
            originated=originated,
        )

    return _packet
