from __future__ import annotations

import math
from dataclasses import replace
from typing import Any, Dict, List, Sequence, Tuple

from ..capture.manifest import mac_to_bytes
from ..core.errors import ManifestError, ScenarioError
from ..core.types import DeviceProfile, DriftEvent, Scenario
from ..utils.jsonio import load_json

# 2020-01-01T00:00:00Z, a Wednesday midnight
DEFAULT_START = 1577836800.0
MUTATIONS = ("shift_sizes", "change_endpoints", "change_rate", "change_gap")
PROTOCOLS = ("tcp", "udp")

CATALOGUE: List[Tuple[str, str]] = [
    ("Surveillance", "Reolink camera"),
    ("Media", "Roku TV"),
    ("Audio", "Echodot"),
    ("Hub", "Philips hub"),
    ("Appliance", "Smarter coffee machine"),
    ("Home automation", "TP-link plug"),
    ("Surveillance", "Yi camera"),
    ("Media", "Fire TV"),
    ("Audio", "Google home"),
    ("Hub", "Xiaomi hub"),
    ("Appliance", "Xiaomi rice cooker"),
    ("Home automation", "Nest thermostat"),
]

Endpoint = Tuple[str, str, int, str]


def device_mac(device_id: int) -> str:
    return f"02:00:00:00:{device_id // 256:02x}:{device_id % 256:02x}"


def device_ip(device_id: int) -> str:
    return f"192.168.{1 + device_id // 200}.{10 + device_id % 200}"


def default_endpoints(device_id: int) -> List[Endpoint]:
    """Two endpoints under one SLD; name lengths never collide across devices."""
    sld = f"iot{'o' * (2 * device_id)}-cloud.com"
    return [
        (f"api{device_id}.{sld}", f"34.{100 + device_id}.0.10", 443, "tcp"),
        (f"data{device_id}.{sld}", f"34.{100 + device_id}.0.11", 8000 + device_id, "udp"),
    ]


def default_profiles(count: int) -> List[DeviceProfile]:
    """``count`` devices named after common test-bed devices, sizes spaced by ×1.5."""
    if not 2 <= count <= len(CATALOGUE):
        raise ScenarioError(f"default profile set holds 2..{len(CATALOGUE)} devices, asked for {count}")
    profiles = []
    for i in range(count):
        category, name = CATALOGUE[i]
        size = 80.0 * 1.5 ** i
        profiles.append(DeviceProfile(
            device_id=i,
            mac=device_mac(i),
            name=name,
            category=category,
            flow_rate=2.0,
            remote_endpoints=default_endpoints(i),
            packet_size_distribution=(size, size * 0.05),
            packets_per_flow=(12.0, 2.0),
            inter_packet_gap=(0.5, 0.1),
            dns_before_flow=True,
            tls_cipher_suites=[0x1301, 0x1302, 0xC02B + i] if size >= 150 else [],
            ntp_period=1800.0,
        ))
    return profiles


def validate_profiles(profiles: Sequence[DeviceProfile]) -> None:
    if len(profiles) < 2:
        raise ScenarioError("a scenario needs at least two device profiles")
    seen_macs: Dict[bytes, int] = {}
    for expected, p in enumerate(sorted(profiles, key=lambda p: p.device_id)):
        if p.device_id != expected:
            raise ScenarioError("device ids must be unique and contiguous from 0")
        try:
            mac = mac_to_bytes(p.mac)
        except ManifestError as exc:
            raise ScenarioError(str(exc)) from None
        if mac in seen_macs:
            raise ScenarioError(f"duplicate MAC {p.mac} (devices {seen_macs[mac]} and {p.device_id})")
        seen_macs[mac] = p.device_id
        means = (p.flow_rate, p.packet_size_distribution[0], p.packets_per_flow[0], p.inter_packet_gap[0])
        if any(not m > 0 for m in means):
            raise ScenarioError(f"profile {p.device_id} ({p.name}): all means must be positive")
        if not p.remote_endpoints:
            raise ScenarioError(f"profile {p.device_id} ({p.name}) has no remote endpoints")
        for _, _, port, proto in p.remote_endpoints:
            if proto not in PROTOCOLS or not 0 < port < 65536:
                raise ScenarioError(f"profile {p.device_id}: bad endpoint port/protocol {port}/{proto}")


def validate_drift(drift: Sequence[DriftEvent], weeks: int, device_count: int) -> None:
    for event in drift:
        if event.mutation not in MUTATIONS:
            raise ScenarioError(f"unknown drift mutation '{event.mutation}'")
        if not 1 <= event.at_week <= weeks:
            raise ScenarioError(f"drift at week {event.at_week} lies outside weeks 1-{weeks}")
        if event.mutation == "change_endpoints" and not event.endpoints:
            raise ScenarioError("change_endpoints needs a new endpoint list")
        if event.mutation != "change_endpoints" and not (event.factor > 0 and math.isfinite(event.factor)):
            raise ScenarioError(f"{event.mutation} needs a positive factor")
        for d in event.device_ids:
            if not 0 <= d < device_count:
                raise ScenarioError(f"drift names unknown device {d}")


def apply_drift(profile: DeviceProfile, drift: Sequence[DriftEvent], week: int) -> DeviceProfile:
    """The profile in force during ``week``: every event with at_week <= week, in order."""
    for event in drift:
        if event.at_week > week or (event.device_ids and profile.device_id not in event.device_ids):
            continue
        if event.mutation == "shift_sizes":
            mean, std = profile.packet_size_distribution
            profile = replace(profile, packet_size_distribution=(mean * event.factor, std * event.factor))
        elif event.mutation == "change_endpoints":
            profile = replace(profile, remote_endpoints=list(event.endpoints))
        elif event.mutation == "change_rate":
            profile = replace(profile, flow_rate=profile.flow_rate * event.factor)
        elif event.mutation == "change_gap":
            mean, std = profile.inter_packet_gap
            profile = replace(profile, inter_packet_gap=(mean * event.factor, std * event.factor))
    return profile


def _endpoint(raw: Sequence[Any]) -> Endpoint:
    if len(raw) != 4:
        raise ScenarioError(f"endpoint must be [domain, ip, port, protocol], got {raw!r}")
    domain, ip, port, proto = raw
    return str(domain).lower(), str(ip), int(port), str(proto).lower()


def _pair(raw: Sequence[Any], what: str) -> Tuple[float, float]:
    if len(raw) != 2:
        raise ScenarioError(f"{what} must be [mean, std]")
    return float(raw[0]), float(raw[1])


def profile_from_json(raw: Dict[str, Any]) -> DeviceProfile:
    try:
        return DeviceProfile(
            device_id=int(raw["device_id"]),
            mac=str(raw["mac"]).lower(),
            name=str(raw.get("name", f"device-{raw['device_id']}")),
            category=str(raw.get("category", "")),
            flow_rate=float(raw["flow_rate"]),
            remote_endpoints=[_endpoint(e) for e in raw["remote_endpoints"]],
            packet_size_distribution=_pair(raw["packet_size_distribution"], "packet_size_distribution"),
            packets_per_flow=_pair(raw["packets_per_flow"], "packets_per_flow"),
            inter_packet_gap=_pair(raw["inter_packet_gap"], "inter_packet_gap"),
            dns_before_flow=bool(raw.get("dns_before_flow", True)),
            tls_cipher_suites=[int(s) for s in raw.get("tls_cipher_suites", [])],
            ntp_period=float(raw["ntp_period"]) if raw.get("ntp_period") else None,
        )
    except KeyError as exc:
        raise ScenarioError(f"profile is missing field {exc}") from None


def profile_to_json(p: DeviceProfile) -> Dict[str, Any]:
    return {
        "device_id": p.device_id,
        "mac": p.mac,
        "name": p.name,
        "category": p.category,
        "flow_rate": p.flow_rate,
        "remote_endpoints": [list(e) for e in p.remote_endpoints],
        "packet_size_distribution": list(p.packet_size_distribution),
        "packets_per_flow": list(p.packets_per_flow),
        "inter_packet_gap": list(p.inter_packet_gap),
        "dns_before_flow": p.dns_before_flow,
        "tls_cipher_suites": list(p.tls_cipher_suites),
        "ntp_period": p.ntp_period,
    }


def drift_from_json(raw: Dict[str, Any]) -> DriftEvent:
    try:
        return DriftEvent(
            at_week=int(raw["at_week"]),
            mutation=raw["mutation"],
            factor=float(raw.get("factor", 1.0)),
            endpoints=tuple(_endpoint(e) for e in raw.get("endpoints", [])),
            device_ids=tuple(int(d) for d in raw.get("device_ids", [])),
        )
    except KeyError as exc:
        raise ScenarioError(f"drift event is missing field {exc}") from None


def scenario_from_json(raw: Dict[str, Any]) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    if "profiles" in raw:
        profiles = [profile_from_json(p) for p in raw["profiles"]]
    else:
        profiles = default_profiles(int(raw.get("devices", 6)))
    scenario = Scenario(
        profiles=profiles,
        weeks=int(raw.get("weeks", 1)),
        drift=[drift_from_json(d) for d in raw.get("drift", [])],
        start_time=float(raw.get("start_time", DEFAULT_START)),
        seed=int(raw.get("seed", 0)),
    )
    validate_scenario(scenario)
    return scenario


def scenario_to_json(scenario: Scenario) -> Dict[str, Any]:
    return {
        "seed": scenario.seed,
        "weeks": scenario.weeks,
        "start_time": scenario.start_time,
        "profiles": [profile_to_json(p) for p in scenario.profiles],
        "drift": [
            {
                "at_week": d.at_week,
                "mutation": d.mutation,
                "factor": d.factor,
                "endpoints": [list(e) for e in d.endpoints],
                "device_ids": list(d.device_ids),
            }
            for d in scenario.drift
        ],
    }


def validate_scenario(scenario: Scenario) -> None:
    if scenario.weeks < 1:
        raise ScenarioError("weeks must be at least 1")
    validate_profiles(scenario.profiles)
    validate_drift(scenario.drift, scenario.weeks, len(scenario.profiles))


def load_scenario(path: str) -> Scenario:
    try:
        raw = load_json(path)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except ValueError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from None
    return scenario_from_json(raw)
