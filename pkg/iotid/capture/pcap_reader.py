from __future__ import annotations

import logging
from typing import BinaryIO, Iterator, Optional, Tuple

import dpkt
from dpkt.utils import inet_to_str

from ..core.errors import ManifestError, PcapFormatError
from ..core.types import CaptureStats, DeviceManifest, PacketRecord, Transport

logger = logging.getLogger(__name__)

_GLOBAL_HDR_LEN = dpkt.pcap.FileHdr.__hdr_len__
_RECORD_HDR_LEN = dpkt.pcap.PktHdr.__hdr_len__


def timestamp_from_parts(sec: int, usec: int) -> float:
    return sec + usec / 1_000_000


def _read_global_header(stream: BinaryIO) -> type:
    buf = stream.read(_GLOBAL_HDR_LEN)
    if len(buf) < _GLOBAL_HDR_LEN:
        raise PcapFormatError("truncated pcap global header")
    header = dpkt.pcap.FileHdr(buf)
    if header.magic == dpkt.pcap.TCPDUMP_MAGIC:
        record_cls = dpkt.pcap.PktHdr
    elif header.magic == dpkt.pcap.PMUDPCT_MAGIC:
        header = dpkt.pcap.LEFileHdr(buf)
        record_cls = dpkt.pcap.LEPktHdr
    else:
        raise PcapFormatError(f"bad pcap magic 0x{header.magic:08x}")
    if header.linktype != dpkt.pcap.DLT_EN10MB:
        raise PcapFormatError(f"unsupported linktype {header.linktype} (Ethernet only)")
    return record_cls


def _decode(ts: float, frame: bytes, wire_len: int, manifest: DeviceManifest,
            stats: CaptureStats) -> Optional[Tuple[int, PacketRecord]]:
    try:
        eth = dpkt.ethernet.Ethernet(frame)
    except (dpkt.UnpackError, dpkt.NeedData):
        stats.malformed_packets += 1
        return None

    # device-to-device traffic belongs to the sender
    device_id = manifest.device_for(eth.src)
    originated = device_id is not None
    if device_id is None:
        device_id = manifest.device_for(eth.dst)
    if device_id is None:
        stats.skipped_unknown_mac += 1
        return None

    if eth.type != dpkt.ethernet.ETH_TYPE_IP:
        stats.skipped_non_ipv4 += 1
        return None
    ip = eth.data
    if not isinstance(ip, dpkt.ip.IP):
        stats.malformed_packets += 1
        return None

    transport = Transport.OTHER
    src_port = dst_port = 0
    payload = b""
    if ip.p in (dpkt.ip.IP_PROTO_TCP, dpkt.ip.IP_PROTO_UDP):
        l4 = ip.data
        if not isinstance(l4, (dpkt.tcp.TCP, dpkt.udp.UDP)):
            stats.malformed_packets += 1
            return None
        transport = Transport.TCP if ip.p == dpkt.ip.IP_PROTO_TCP else Transport.UDP
        src_port, dst_port = l4.sport, l4.dport
        payload = bytes(l4.data)

    record = PacketRecord(
        timestamp=ts,
        src_mac=bytes(eth.src),
        dst_mac=bytes(eth.dst),
        src_ip=inet_to_str(ip.src),
        dst_ip=inet_to_str(ip.dst),
        src_port=src_port,
        dst_port=dst_port,
        transport=transport,
        wire_len=wire_len,
        data=frame,
        payload=payload,
        originated=originated,
    )
    return device_id, record


def _records(stream: BinaryIO, record_cls: type, manifest: DeviceManifest,
             stats: CaptureStats) -> Iterator[Tuple[int, PacketRecord]]:
    while True:
        hdr_buf = stream.read(_RECORD_HDR_LEN)
        if not hdr_buf:
            break
        stats.total_records += 1
        if len(hdr_buf) < _RECORD_HDR_LEN:
            logger.debug("truncated record header at end of capture")
            stats.malformed_packets += 1
            break
        hdr = record_cls(hdr_buf)
        frame = stream.read(hdr.caplen)
        if len(frame) < hdr.caplen:
            logger.debug("truncated record body (%d of %d bytes)", len(frame), hdr.caplen)
            stats.malformed_packets += 1
            break
        decoded = _decode(timestamp_from_parts(hdr.tv_sec, hdr.tv_usec), frame,
                          max(hdr.len, len(frame)), manifest, stats)
        if decoded is None:
            continue
        stats.emitted += 1
        stats.per_device[decoded[0]] = stats.per_device.get(decoded[0], 0) + 1
        yield decoded


def parse_pcap(stream: BinaryIO, manifest: DeviceManifest,
               stats: Optional[CaptureStats] = None) -> Iterator[Tuple[int, PacketRecord]]:
    """Decode a pcap stream into (device_id, PacketRecord) pairs.

    The global header is validated eagerly; records are decoded lazily.
    Counters are accumulated into ``stats`` as the iterator is consumed.
    """
    if not manifest.entries:
        raise ManifestError("manifest is empty")
    record_cls = _read_global_header(stream)
    return _records(stream, record_cls, manifest, stats if stats is not None else CaptureStats())
