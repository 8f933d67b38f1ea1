"""
Tests for flow segmentation and the per-device DNS domain map.
"""

from collections import defaultdict

import numpy as np
import pandas as pd
import pytest

from iotid.core.types import DnsObservation, Transport
from iotid.flows.domain_map import DomainMap, resolve_domain, sld_of
from iotid.flows.flow_table import FlowTable, flow_key_for, segment_flows
from iotid.features.store import read_flows, write_flows


def test_sld_of():
    assert sld_of("example.com") == "example.com"
    assert sld_of("cdn.eu.example.com") == "example.com"
    assert sld_of("localhost") == "localhost"
    assert sld_of("API.Example.COM.") == "example.com"


def test_short_flow_exports_on_flush(packet):
    table = FlowTable()
    for t in (0, 5, 8):
        assert table.advance(0, packet(t)) == []
    records = table.flush()
    assert len(records) == 1
    assert records[0].duration == 8
    assert records[0].packet_count == 3
    assert table.flush() == []


def test_idle_timeout_splits(packet):
    table = FlowTable()
    assert table.advance(0, packet(0)) == []
    exported = table.advance(0, packet(11))
    assert len(exported) == 1
    assert (exported[0].start_time, exported[0].end_time) == (0, 0)
    rest = table.flush()
    assert rest[0].start_time == 11
    assert rest[0].continuation_index == 1


def test_idle_gap_of_exactly_ten_seconds_stays(packet):
    table = FlowTable()
    table.advance(0, packet(0))
    assert table.advance(0, packet(10)) == []


def test_active_timeout_splits(packet):
    table = FlowTable()
    exported = []
    for t in range(32):
        exported.extend(table.advance(0, packet(t)))
    assert len(exported) == 1
    assert (exported[0].start_time, exported[0].end_time) == (0, 30)
    assert exported[0].packet_count == 31
    assert table.flush()[0].start_time == 31


def test_two_open_flows(packet):
    table = FlowTable()
    table.advance(0, packet(0, sport=40000))
    table.advance(0, packet(1, sport=40001))
    assert len(table) == 2
    assert [r.key.src_port for r in table.flush()] == [40000, 40001]


def test_sixty_packet_flow_keeps_first_fifty(packet):
    table = FlowTable()
    for i in range(60):
        table.advance(0, packet(i * 0.1, size=100 + i))
    record = table.flush()[0]
    assert record.packet_count == 60
    assert len(record.pkt_sizes) == 50 and len(record.pkt_times) == 50
    assert record.pkt_sizes[:2] == [100, 101] and record.pkt_sizes[-1] == 149


def test_reply_joins_request_flow(packet):
    """Directions share one device-centric key and split bytes by direction."""
    out = packet(0, 120, originated=True)
    back = packet(0.2, 300, originated=False)
    assert flow_key_for(out) == flow_key_for(back)
    record = segment_flows([(0, out), (0, back)])[0]
    assert (record.bytes_out, record.bytes_in, record.pkts_out, record.pkts_in) == (120, 300, 1, 1)


def test_other_transport_rejected(packet):
    with pytest.raises(ValueError):
        FlowTable().advance(0, packet(0, transport=Transport.OTHER))
    assert segment_flows([(0, packet(0, transport=Transport.OTHER))]) == []


def _resegment(pkts, idle=10.0, active=30.0):
    """Time-ordered packets of one flow grouped by the idle and active timeouts."""
    groups = []
    for p in pkts:
        current = groups[-1] if groups else None
        if current and p.timestamp - current[-1].timestamp <= idle and p.timestamp - current[0].timestamp <= active:
            current.append(p)
        else:
            groups.append([p])
    return groups


def test_segmentation_matches_direct_regrouping(packet):
    """Randomised packet lists: table boundaries equal a direct regrouping of each flow's packets."""
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        n = int(rng.integers(0, 201))
        n_flows = int(rng.integers(1, 5))
        times = np.sort(rng.uniform(0, 120, size=n))
        flows = rng.integers(0, n_flows, size=n)
        sizes = rng.integers(60, 1515, size=n)
        packets = [(0, packet(float(t), int(s), sport=40000 + int(f))) for t, f, s in zip(times, flows, sizes)]

        records = segment_flows(packets)

        by_flow = defaultdict(list)
        for (_, p) in packets:
            by_flow[p.src_port].append(p)
        expected = []
        for port, pkts in by_flow.items():
            for group in _resegment(pkts):
                expected.append((port, group[0].timestamp, len(group), sum(p.wire_len for p in group)))
        got = [(r.key.src_port, r.start_time, r.packet_count, r.bytes_out + r.bytes_in) for r in records]
        assert sorted(got) == sorted(expected)
        assert sum(r.bytes_out + r.bytes_in for r in records) == int(sizes.sum())
        assert sum(r.packet_count for r in records) == n


def test_domain_map_lookup():
    dm = DomainMap.from_observations([DnsObservation(1.0, "time.google.com", "216.58.0.1", 0)])
    assert resolve_domain(dm, 0, "216.58.0.1") == "google.com"
    assert resolve_domain(dm, 0, "1.2.3.4") == ""
    assert resolve_domain(dm, 1, "216.58.0.1") == ""


def test_domain_map_most_recent_wins():
    dm = DomainMap.from_observations([
        DnsObservation(1.0, "a.x.com", "10.0.0.1", 0),
        DnsObservation(5.0, "b.y.net", "10.0.0.1", 0),
    ])
    assert dm.resolve(0, "10.0.0.1", 6.0) == "y.net"
    assert dm.resolve(0, "10.0.0.1", 3.0) == "x.com"
    assert dm.resolve(0, "10.0.0.1", 0.5) == ""
    assert dm.domains() == ["x.com", "y.net"]


def test_flow_records_carry_domain(packet):
    dm = DomainMap.from_observations([DnsObservation(0.0, "api0.iot-cloud.com", "34.100.0.10", 0)])
    records = segment_flows([(0, packet(1.0))], domain_map=dm)
    assert records[0].remote_domain == "iot-cloud.com"


def test_flow_store_round_trip(packet, tmp_path):
    dm = DomainMap.from_observations([DnsObservation(0.0, "api0.iot-cloud.com", "34.100.0.10", 0)])
    stream = [(0, packet(float(i), 100 + i, originated=i % 2 == 0)) for i in range(40)]
    stream.append((0, packet(20.5, 90, sport=41000, transport=Transport.UDP, remote_ip="10.9.9.9")))
    stream.extend((0, packet(100 + i * 0.5, 200, sport=42000)) for i in range(55))
    stream.sort(key=lambda item: item[1].timestamp)
    flows = segment_flows(stream, domain_map=dm)
    assert [(f.start_time, f.continuation_index) for f in flows] == [(0.0, 0), (20.5, 0), (31.0, 1), (100.0, 0)]
    assert flows[0].remote_domain == "iot-cloud.com" and flows[1].remote_domain == ""
    assert flows[3].pkts_out == 55 and len(flows[3].pkt_sizes) == 50

    path = str(tmp_path / "flows.csv")
    assert write_flows(flows, path) == 4
    assert read_flows(path) == flows

    with open(path) as f:
        header = f.readline().strip().split(",")
    sizes = [f"size_{i}" for i in range(1, 51)]
    times = [f"time_{i}" for i in range(1, 51)]
    assert header[-100:] == sizes + times
    assert header[:-100] == ["device_id", "src_ip", "dst_ip", "src_port", "dst_port", "transport", "start_time",
                             "end_time", "bytes_out", "bytes_in", "pkts_out", "pkts_in", "remote_domain",
                             "continuation_index"]

    table = pd.read_csv(path, dtype=str, keep_default_na=False)
    udp = table.iloc[1]
    assert (udp["size_1"], udp["time_1"]) == ("90", "20.5")
    assert all(udp[c] == "" for c in sizes[1:] + times[1:])
    seg1 = table.iloc[2]
    assert [seg1[c] for c in sizes[:9]] == [str(100 + i) for i in range(31, 40)]
    assert seg1["size_10"] == "" and seg1["time_10"] == ""
    capped = table.iloc[3]
    assert capped["size_50"] == "200" and capped["time_50"] == "124.5"
