"""Ethernet/IPv4 frame builders for the traffic generator."""
from __future__ import annotations

import hashlib
import socket
import struct
from typing import Sequence

import dpkt

ETH_LEN = 14
IP_LEN = 20
UDP_LEN = 8
TCP_LEN = 20
MIN_FRAME = 60
MAX_FRAME = 1514

GATEWAY_MAC = "02:aa:00:00:00:01"
RESOLVER_IP = "192.168.1.1"
NTP_SERVER_IP = "162.159.200.1"
DNS_PORT = 53
NTP_PORT = 123


def header_len(proto: str) -> int:
    return ETH_LEN + IP_LEN + (TCP_LEN if proto == "tcp" else UDP_LEN)


def pattern(seed_text: str, length: int) -> bytes:
    """Deterministic filler bytes derived from ``seed_text``."""
    out = bytearray()
    counter = 0
    while len(out) < length:
        out.extend(hashlib.sha256(f"{seed_text}/{counter}".encode()).digest())
        counter += 1
    return bytes(out[:length])


def _ip(src_ip: str, dst_ip: str, proto: int, l4: dpkt.Packet, ip_id: int) -> dpkt.ip.IP:
    ip = dpkt.ip.IP(src=socket.inet_aton(src_ip), dst=socket.inet_aton(dst_ip), p=proto, ttl=64,
                    id=ip_id & 0xFFFF, data=l4)
    ip.len = IP_LEN + len(bytes(l4))
    return ip


def _ethernet(src_mac: bytes, dst_mac: bytes, ip: dpkt.ip.IP) -> bytes:
    frame = bytes(dpkt.ethernet.Ethernet(src=src_mac, dst=dst_mac, type=dpkt.ethernet.ETH_TYPE_IP, data=ip))
    if len(frame) < MIN_FRAME:
        # link-layer padding past the IP datagram
        frame += b"\x00" * (MIN_FRAME - len(frame))
    return frame


def udp_frame(src_mac: bytes, dst_mac: bytes, src_ip: str, dst_ip: str, sport: int, dport: int,
              payload: bytes, ip_id: int = 0) -> bytes:
    udp = dpkt.udp.UDP(sport=sport, dport=dport, data=payload)
    udp.ulen = UDP_LEN + len(payload)
    return _ethernet(src_mac, dst_mac, _ip(src_ip, dst_ip, dpkt.ip.IP_PROTO_UDP, udp, ip_id))


def tcp_frame(src_mac: bytes, dst_mac: bytes, src_ip: str, dst_ip: str, sport: int, dport: int,
              payload: bytes, seq: int = 0, ack: int = 0, ip_id: int = 0) -> bytes:
    tcp = dpkt.tcp.TCP(sport=sport, dport=dport, seq=seq & 0xFFFFFFFF, ack=ack & 0xFFFFFFFF,
                       flags=dpkt.tcp.TH_ACK | dpkt.tcp.TH_PUSH, win=65535, data=payload)
    return _ethernet(src_mac, dst_mac, _ip(src_ip, dst_ip, dpkt.ip.IP_PROTO_TCP, tcp, ip_id))


def dns_query(qid: int, name: str) -> bytes:
    dns = dpkt.dns.DNS(id=qid, op=dpkt.dns.DNS_RD,
                       qd=[dpkt.dns.DNS.Q(name=name, type=dpkt.dns.DNS_A, cls=dpkt.dns.DNS_IN)])
    return bytes(dns)


def dns_response(qid: int, name: str, address: str, ttl: int = 300) -> bytes:
    dns = dpkt.dns.DNS(id=qid, op=dpkt.dns.DNS_RD | dpkt.dns.DNS_RA,
                       qd=[dpkt.dns.DNS.Q(name=name, type=dpkt.dns.DNS_A, cls=dpkt.dns.DNS_IN)],
                       an=[dpkt.dns.DNS.RR(name=name, type=dpkt.dns.DNS_A, cls=dpkt.dns.DNS_IN, ttl=ttl,
                                           rdata=socket.inet_aton(address))])
    dns.qr = dpkt.dns.DNS_R
    return bytes(dns)


def client_hello(cipher_suites: Sequence[int], random: bytes, pad_to: int = 0) -> bytes:
    """A TLS 1.2 ClientHello record, grown with a padding extension up to ``pad_to`` bytes."""
    suites = struct.pack(f">H{len(cipher_suites)}H", 2 * len(cipher_suites), *cipher_suites)
    body = b"\x03\x03" + random[:32].ljust(32, b"\x00") + b"\x00" + suites + b"\x01\x00"
    base = 5 + 4 + len(body) + 2
    extensions = b""
    if pad_to > base + 4:
        pad = pad_to - base - 4
        extensions = struct.pack(">HH", 0x0015, pad) + b"\x00" * pad
    body += struct.pack(">H", len(extensions)) + extensions
    handshake = bytes([0x01]) + len(body).to_bytes(3, "big") + body
    return bytes([0x16, 0x03, 0x01]) + struct.pack(">H", len(handshake)) + handshake


def ntp_packet(mode: int, transmit: float) -> bytes:
    """48-byte NTPv4 packet; mode 3 is a client request, 4 a server reply."""
    seconds = int(transmit) + 2208988800
    fraction = int((transmit % 1.0) * (1 << 32)) & 0xFFFFFFFF
    first = (0 << 6) | (4 << 3) | mode
    return struct.pack(">BBbb", first, 0 if mode == 3 else 2, 6, -20) + b"\x00" * 36 + struct.pack(">II", seconds, fraction)
