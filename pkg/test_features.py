"""
Tests for the four feature extractors and the moment statistics they share.
"""

import math

import numpy as np
import pytest

from conftest import DEVICE_MACS, GATEWAY
from iotid.capture.manifest import mac_to_bytes
from iotid.core.types import DnsObservation, FlowKey, FlowRecord, TlsClientHelloObservation, Transport
from iotid.features.flow_features import extract_flow_features
from iotid.features.hour_window import WINDOW, extract_hour_window
from iotid.features.moments import moments
from iotid.features.packet_grid import anonymize_frame, build_packet_grid, build_packet_grids
from iotid.features.second_window import extract_second_window
from iotid.flows.domain_map import DomainMap
from iotid.flows.flow_table import flow_key_for
from iotid.synth.frames import udp_frame

HOUR = 3600.0 * 100
KEY = FlowKey("192.168.1.10", "34.100.0.10", 40000, 443, Transport.TCP)


def _flow(start, end, sizes, times, *, out=1, into=0, domain=""):
    return FlowRecord(key=KEY, device_id=0, start_time=start, end_time=end,
                      bytes_out=int(sum(sizes)), pkts_out=out, pkts_in=into,
                      pkt_sizes=list(sizes), pkt_times=list(times), remote_domain=domain)


def test_moments_conventions():
    assert moments([]) == (0, 0, 0, 0, 0)
    assert moments([5, 5, 5]) == (5, 0, 0, 0, 0)
    assert moments([7]) == (7, 0, 0, 0, 0)


def test_moments_three_values():
    m = moments([100, 200, 300])
    assert m.mean == pytest.approx(200)
    assert m.var == pytest.approx(6666.6667, rel=1e-6)
    assert m.std == pytest.approx(81.6497, rel=1e-5)
    assert m.skew == pytest.approx(0, abs=1e-12)
    assert m.kurtosis == pytest.approx(1.5)


def _direct_moments(xs):
    """Population moments evaluated term by term with exactly rounded sums."""
    if not xs:
        return (0.0, 0.0, 0.0, 0.0, 0.0)
    if all(x == xs[0] for x in xs):
        return (xs[0], 0.0, 0.0, 0.0, 0.0)
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / n
    m3 = math.fsum((x - mean) ** 3 for x in xs) / n
    m4 = math.fsum((x - mean) ** 4 for x in xs) / n
    return (mean, math.sqrt(var), var, m3 / var ** 1.5, m4 / var ** 2)


def test_moments_match_direct_formulas():
    """Random series, plus empty, single and constant ones, against a plain-Python evaluation."""
    rng = np.random.default_rng(5)
    series = [[], [3.25], [0.1] * 7, [1500.0] * 50]
    for i in range(1000):
        n = int(rng.integers(0, 41))
        if i % 10 == 0:
            series.append([float(rng.integers(60, 1515))] * n)
        else:
            series.append([float(v) for v in rng.exponential(3.0, size=n)])
    for xs in series:
        got = moments(xs)
        want = _direct_moments(xs)
        for name, g, w in zip(got._fields, got, want):
            assert g == pytest.approx(w, rel=1e-9, abs=1e-9), (name, xs)


def test_flow_features_single_packet():
    row = extract_flow_features(_flow(10.0, 10.0, [60], [10.0]))
    assert row.pkts_out + row.pkts_in == 1
    assert (row.ipt_mean, row.ipt_std, row.ipt_var, row.ipt_skew, row.ipt_kurtosis) == (0, 0, 0, 0, 0)
    assert row.b_mean == 60 and row.b_std == 0
    assert row.duration == 0
    assert (row.src_port, row.dest_port, row.protocol) == (40000, 443, 6)


def test_flow_features_single_interval():
    row = extract_flow_features(_flow(0.0, 0.5, [80, 90], [0.0, 0.5], out=1, into=1))
    assert row.ipt_mean == pytest.approx(0.5)
    assert row.ipt_std == 0


def test_flow_features_size_moments():
    row = extract_flow_features(_flow(0.0, 2.0, [100, 200, 300], [0.0, 1.0, 2.0], out=3))
    assert row.b_mean == pytest.approx(200)
    assert row.b_std == pytest.approx(81.6497, rel=1e-5)


def test_flow_features_domain_lookup():
    dm = DomainMap.from_observations([DnsObservation(0.0, "eu.api.vendor.io", "34.100.0.10", 0)])
    assert extract_flow_features(_flow(1.0, 1.0, [60], [1.0]), dm).domain == "vendor.io"
    assert extract_flow_features(_flow(1.0, 1.0, [60], [1.0], domain="kept.com")).domain == "kept.com"


def test_flow_features_reject_empty_flow():
    with pytest.raises(ValueError):
        extract_flow_features(_flow(0.0, 0.0, [], [], out=0))


def test_second_window_single_packet(packet):
    rows = extract_second_window([(0, packet(12.25, 1000))])
    assert len(rows) == 1
    r = rows[0]
    assert (r.second_start, r.bytes_sum, r.bytes_avg, r.bytes_std) == (12.0, 1000, 1000, 0)


def test_second_window_statistics(packet):
    rows = extract_second_window([(0, packet(5.1, 100)), (0, packet(5.5, 200)), (0, packet(5.9, 300))])
    assert len(rows) == 1
    assert rows[0].bytes_sum == 600
    assert rows[0].bytes_avg == pytest.approx(200)
    assert rows[0].bytes_std == pytest.approx(81.6497, rel=1e-5)


def test_second_window_skips_empty_seconds(packet):
    rows = extract_second_window([(0, packet(t)) for t in (1.0, 1.5, 4.2, 9.9)] + [(1, packet(4.0))])
    assert [(r.device_id, r.second_start) for r in rows] == [(0, 1.0), (0, 4.0), (0, 9.0), (1, 4.0)]
    assert extract_second_window([]) == []


def test_grid_pads_single_frame(packet):
    frame = udp_frame(mac_to_bytes(DEVICE_MACS[0]), mac_to_bytes(GATEWAY), "192.168.1.10", "8.8.8.8",
                      5000, 53, b"\xff" * 18)
    assert len(frame) == 60
    pkt = packet(3.0, 60, transport=Transport.UDP, sport=5000, dport=53, remote_ip="8.8.8.8", data=frame)

    grid = build_packet_grid([pkt], device_id=0, key=flow_key_for(pkt))
    cells = grid.cells
    assert cells.shape == (10, 250) and cells.dtype == np.uint8
    assert not cells[0, :12].any()
    assert bytes(cells[0, 12:14]) == b"\x08\x00"
    assert not cells[0, 26:34].any()
    assert bytes(cells[0, 42:60]) == b"\xff" * 18
    assert not cells[0, 60:].any()
    assert not cells[1:].any()
    assert grid.start_time == 3.0


def test_anonymize_non_ipv4_keeps_addresses():
    frame = b"\x11" * 12 + b"\x86\xdd" + b"\x22" * 60
    row = anonymize_frame(frame)
    assert not row[:12].any()
    assert (row[14:74] == 0x22).all()


def test_grid_anonymization_on_random_frames(packet):
    """Address bytes are zeroed in every row; every other captured byte is kept and the rest is zero."""
    rng = np.random.default_rng(17)
    for _ in range(200):
        frames = []
        for _ in range(int(rng.integers(1, 13))):
            frame = bytearray(rng.integers(0, 256, size=int(rng.integers(0, 400)), dtype=np.uint8).tobytes())
            if len(frame) >= 34 and rng.random() < 0.6:
                frame[12:14] = b"\x08\x00"
                frame[14] = 0x45
            frames.append(bytes(frame))
        grid = build_packet_grid([packet(i, data=f) for i, f in enumerate(frames)], device_id=0, key=KEY)
        assert grid.cells.shape == (10, 250)
        for i, row in enumerate(grid.cells):
            if i >= len(frames):
                assert not row.any()
                continue
            frame = frames[i]
            ipv4 = len(frame) >= 34 and frame[12:14] == b"\x08\x00" and frame[14] >> 4 == 4
            hidden = set(range(12)) | (set(range(26, 34)) if ipv4 else set())
            for j in range(250):
                if j in hidden or j >= len(frame):
                    assert row[j] == 0
                else:
                    assert row[j] == frame[j]


def test_grid_keeps_first_ten_packets(packet):
    packets = [(0, packet(i, data=bytes([i + 1]) * 64)) for i in range(12)]
    grids = build_packet_grids(packets)
    assert len(grids) == 1
    cells = grids[0].cells
    # the first data byte after the zeroed MACs identifies the packet
    assert [int(cells[r, 12]) for r in range(10)] == list(range(1, 11))
    assert grids[0].key == flow_key_for(packets[0][1])


def test_hour_window_flow_statistics(packet):
    flows = [_flow(HOUR + 10, HOUR + 20, [300, 200], [HOUR + 10, HOUR + 20], out=2)]
    rows = extract_hour_window(0, [packet(HOUR + 10, 300), packet(HOUR + 20, 200)], flows)
    assert len(rows) == 1
    r = rows[0]
    assert r.window_start == HOUR
    assert r.flow_volume == 500
    assert r.flow_duration == 10
    assert r.flow_rate == pytest.approx(0.1389, abs=1e-4)
    assert r.bag_of_ports == [443]


def test_hour_window_dns_interval(packet):
    queries = [packet(HOUR + t, 80, transport=Transport.UDP, dport=53, remote_ip="192.168.1.1")
               for t in (0, 600, 1200)]
    rows = extract_hour_window(0, queries, [])
    assert rows[0].dns_interval == pytest.approx(600)
    assert rows[0].ntp_interval == 0


def test_hour_window_sleep_time(packet):
    rows = extract_hour_window(0, [packet(HOUR + t) for t in (0, 100, 3500)], [])
    assert rows[0].sleep_time == pytest.approx(3400)


def test_hour_window_bags(packet):
    dns = [DnsObservation(HOUR, "a.cloud.com", "34.100.0.10", 0)]
    tls = [TlsClientHelloObservation(HOUR + 1, 0, (0x1302, 0x1301)),
           TlsClientHelloObservation(HOUR + 1, 1, (0xC02B,))]
    rows = extract_hour_window(0, [packet(HOUR + 1)], [_flow(HOUR + 1, HOUR + 1, [100], [HOUR + 1])], dns, tls)
    assert rows[0].bag_of_domains == ["cloud.com"]
    assert rows[0].bag_of_ciphers == [0x1301, 0x1302]


def test_hour_window_one_row_per_active_hour(packet):
    rows = extract_hour_window(0, [packet(HOUR + 5), packet(HOUR + 2 * WINDOW + 5)], [])
    assert [r.window_start for r in rows] == [HOUR, HOUR + 2 * WINDOW]
    assert rows[0].flow_volume == 0 and rows[0].bag_of_ports == []
