from __future__ import annotations

import re
from typing import Any, Dict, List

from ..core.errors import ManifestError
from ..core.types import DeviceManifest, ManifestEntry
from ..utils.jsonio import load_json, save_json_atomic

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


def mac_to_bytes(mac: str) -> bytes:
    if not isinstance(mac, str) or not _MAC_RE.match(mac):
        raise ManifestError(f"invalid MAC address {mac!r} (expected lowercase aa:bb:cc:dd:ee:ff)")
    return bytes(int(part, 16) for part in mac.split(":"))


def mac_to_str(mac: bytes) -> str:
    return ":".join(f"{b:02x}" for b in mac)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ManifestError(message)


def manifest_from_json(raw: Any) -> DeviceManifest:
    _require(isinstance(raw, list) and len(raw) > 0, "manifest must be a non-empty JSON array")
    entries: List[ManifestEntry] = []
    for item in raw:
        _require(isinstance(item, dict), "manifest entries must be objects")
        _require(isinstance(item.get("device_id"), int) and item["device_id"] >= 0,
                 f"device_id must be a non-negative integer: {item!r}")
        entries.append(ManifestEntry(
            mac=mac_to_bytes(item.get("mac")),
            device_id=int(item["device_id"]),
            name=str(item.get("name", "")),
        ))

    macs = [e.mac for e in entries]
    _require(len(set(macs)) == len(macs), "manifest MAC addresses must be unique")
    ids = sorted(e.device_id for e in entries)
    _require(ids == list(range(len(ids))), "device_id values must be unique and contiguous from 0")
    return DeviceManifest(entries=entries)


def load_manifest(path: str) -> DeviceManifest:
    try:
        raw = load_json(path)
    except FileNotFoundError:
        raise ManifestError(f"manifest file not found: {path}")
    except ValueError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}")
    return manifest_from_json(raw)


def manifest_to_json(manifest: DeviceManifest) -> List[Dict[str, Any]]:
    return [
        {"mac": mac_to_str(e.mac), "device_id": e.device_id, "name": e.name}
        for e in sorted(manifest.entries, key=lambda e: e.device_id)
    ]


def save_manifest(manifest: DeviceManifest, path: str) -> None:
    save_json_atomic(manifest_to_json(manifest), path)
