from __future__ import annotations

from typing import BinaryIO

import dpkt

SNAPLEN = 65535
VERSION_MAJOR = 2
VERSION_MINOR = 4


class PcapWriter:
    """Little-endian classic pcap writer with exact microsecond timestamps."""

    def __init__(self, stream: BinaryIO, snaplen: int = SNAPLEN):
        self.stream = stream
        self.snaplen = snaplen
        self.count = 0
        header = dpkt.pcap.LEFileHdr(magic=dpkt.pcap.TCPDUMP_MAGIC, v_major=VERSION_MAJOR,
                                     v_minor=VERSION_MINOR, thiszone=0, sigfigs=0,
                                     snaplen=snaplen, linktype=dpkt.pcap.DLT_EN10MB)
        stream.write(bytes(header))

    def write(self, frame: bytes, timestamp_us: int) -> None:
        captured = frame[: self.snaplen]
        sec, usec = divmod(int(timestamp_us), 1_000_000)
        record = dpkt.pcap.LEPktHdr(tv_sec=sec, tv_usec=usec, caplen=len(captured), len=len(frame))
        self.stream.write(bytes(record))
        self.stream.write(captured)
        self.count += 1
