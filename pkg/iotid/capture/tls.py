from __future__ import annotations

import logging
import struct
from typing import Iterable, List, Optional, Tuple

from ..core.types import CaptureStats, PacketRecord, TlsClientHelloObservation, Transport

logger = logging.getLogger(__name__)

TLS_HANDSHAKE = 0x16
TLS_MAJOR = 0x03
CLIENT_HELLO = 0x01

# record header (5) + handshake header (4) + client_version (2) + random (32)
_SESSION_ID_OFFSET = 5 + 4 + 2 + 32


class TruncatedClientHello(Exception):
    pass


def looks_like_client_hello(payload: bytes) -> bool:
    return (
        len(payload) >= 6
        and payload[0] == TLS_HANDSHAKE
        and payload[1] == TLS_MAJOR
        and payload[5] == CLIENT_HELLO
    )


def parse_cipher_suites(payload: bytes) -> Tuple[int, ...]:
    """Cipher suites of a ClientHello in wire order.

    Only the bytes up to the end of the cipher-suite vector must be present;
    the rest of the hello may continue in later segments.
    """
    if len(payload) < _SESSION_ID_OFFSET + 1:
        raise TruncatedClientHello("hello ends before session id")
    sid_len = payload[_SESSION_ID_OFFSET]
    suites_off = _SESSION_ID_OFFSET + 1 + sid_len
    if len(payload) < suites_off + 2:
        raise TruncatedClientHello("hello ends before cipher-suite length")
    (vec_len,) = struct.unpack_from(">H", payload, suites_off)
    if vec_len == 0 or vec_len % 2:
        raise TruncatedClientHello(f"bad cipher-suite vector length {vec_len}")
    end = suites_off + 2 + vec_len
    if len(payload) < end:
        raise TruncatedClientHello("cipher-suite vector extends past the segment")
    return struct.unpack_from(f">{vec_len // 2}H", payload, suites_off + 2)


def extract_tls_ciphers(packets: Iterable[Tuple[int, PacketRecord]],
                        stats: Optional[CaptureStats] = None) -> List[TlsClientHelloObservation]:
    stats = stats if stats is not None else CaptureStats()
    observations: List[TlsClientHelloObservation] = []
    for device_id, pkt in packets:
        if pkt.transport != Transport.TCP or not pkt.payload:
            continue
        if not looks_like_client_hello(pkt.payload):
            continue
        try:
            suites = parse_cipher_suites(pkt.payload)
        except TruncatedClientHello as exc:
            stats.malformed_tls += 1
            logger.debug("skipping ClientHello at %.6f: %s", pkt.timestamp, exc)
            continue
        observations.append(TlsClientHelloObservation(
            timestamp=pkt.timestamp, device_id=device_id, cipher_suites=tuple(suites)
        ))
    return observations
