"""Versioned binary container for trained models.

Layout: ``b"IOTID"`` | format version (u16, big endian) | kind tag (u8) |
schema tag (u8) | pickled payload of plain numpy arrays, lists and dicts.
"""
from __future__ import annotations

import os
import pickle
import struct
from typing import Any, Dict

from ..core.errors import ModelFormatError
from ..core.types import ModelArtifact
from ..utils.jsonio import write_bytes_atomic

MAGIC = b"IOTID"
FORMAT_VERSION = 1
PICKLE_PROTOCOL = 4
_HEADER = struct.Struct(">HBB")

KIND_TAGS = {"nbm": 1, "dt": 2, "rf": 3, "fcnn": 4, "cnn": 5, "two-stage": 6}
SCHEMA_TAGS = {"hour": 1, "second": 2, "grid": 3, "flow": 4}
_KINDS = {v: k for k, v in KIND_TAGS.items()}
_SCHEMAS = {v: k for k, v in SCHEMA_TAGS.items()}


def artifact_to_bytes(artifact: ModelArtifact) -> bytes:
    payload: Dict[str, Any] = {
        "class_count": artifact.class_count,
        "training_period": artifact.training_period,
        "period_weeks": tuple(artifact.period_weeks),
        "seed": artifact.seed,
        "week_origin": artifact.week_origin,
        "history": list(artifact.history),
        "best_epoch": artifact.best_epoch,
        "encoder": artifact.encoder_state,
        "model": artifact.model_state,
    }
    header = _HEADER.pack(FORMAT_VERSION, KIND_TAGS[artifact.kind], SCHEMA_TAGS[artifact.schema])
    return MAGIC + header + pickle.dumps(payload, protocol=PICKLE_PROTOCOL)


def artifact_from_bytes(blob: bytes) -> ModelArtifact:
    if not blob.startswith(MAGIC) or len(blob) < len(MAGIC) + _HEADER.size:
        raise ModelFormatError("not an iotid model file")
    version, kind_tag, schema_tag = _HEADER.unpack_from(blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version} (expected {FORMAT_VERSION})")
    if kind_tag not in _KINDS or schema_tag not in _SCHEMAS:
        raise ModelFormatError(f"unknown model kind/schema tags {kind_tag}/{schema_tag}")
    try:
        payload = pickle.loads(blob[len(MAGIC) + _HEADER.size:])
    except Exception as exc:
        raise ModelFormatError(f"corrupt model payload: {exc}") from exc
    return ModelArtifact(
        kind=_KINDS[kind_tag],
        schema=_SCHEMAS[schema_tag],
        class_count=int(payload["class_count"]),
        training_period=payload["training_period"],
        period_weeks=tuple(payload["period_weeks"]),
        seed=int(payload["seed"]),
        model_state=payload["model"],
        encoder_state=payload["encoder"],
        week_origin=payload["week_origin"],
        history=payload["history"],
        best_epoch=payload["best_epoch"],
        format_version=version,
    )


def save_artifact(artifact: ModelArtifact, path: str) -> int:
    """Write the model file atomically; returns its size in bytes."""
    blob = artifact_to_bytes(artifact)
    write_bytes_atomic(blob, path)
    return len(blob)


def load_artifact(path: str) -> ModelArtifact:
    if not os.path.exists(path):
        raise ModelFormatError(f"model file not found: {path} (run 'train' first)")
    with open(path, "rb") as f:
        return artifact_from_bytes(f.read())
