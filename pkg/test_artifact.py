"""
Tests for model training through the registry and the versioned model file.
"""

import struct

import numpy as np
import pandas as pd
import pytest

from iotid.core.errors import ModelFormatError, SchemaMismatchError, UsageError
from iotid.core.types import NetworkSettings, Settings, TreeSettings
from iotid.models.artifact import MAGIC, artifact_from_bytes, artifact_to_bytes, load_artifact, save_artifact
from iotid.models.encoders import FLOW_NUMERIC, HOUR_NUMERIC, SECOND_NUMERIC
from iotid.models.registry import LoadedModel, check_compatible, train_model

SETTINGS = Settings(tree=TreeSettings(n_trees=5), network=NetworkSettings(epochs=3, batch_size=16))
N = 24


def _labels():
    return np.repeat([0, 1, 2], N // 3)


def _numeric(columns, seed):
    rng = np.random.default_rng(seed)
    y = _labels()
    data = {c: rng.normal(10.0 * (y + 1) + i, 1.0) for i, c in enumerate(columns)}
    return pd.DataFrame({"device_id": y, **data})


def _frame(schema):
    y = _labels()
    if schema == "second":
        return _numeric(SECOND_NUMERIC, 1), None
    if schema == "flow":
        df = _numeric(FLOW_NUMERIC, 2)
        df["domain"] = [f"vendor{c}.com" for c in y]
        return df, None
    if schema == "hour":
        df = _numeric(HOUR_NUMERIC, 3)
        df["bag_of_ports"] = [f"443 {8000 + c}" for c in y]
        df["bag_of_domains"] = [f"vendor{c}.com" for c in y]
        df["bag_of_ciphers"] = ["4865 4866" if c else "" for c in y]
        return df, None
    rng = np.random.default_rng(4)
    grids = rng.integers(0, 40, size=(N, 10, 250), dtype=np.uint8)
    grids[:, 0, 20:40] = (y * 100)[:, None].astype(np.uint8)
    return pd.DataFrame({"device_id": y, "start_time": np.arange(N, dtype=float)}), grids


PAIRS = [("hour", "two-stage"), ("hour", "nbm"), ("hour", "rf"), ("hour", "dt"),
         ("second", "rf"), ("second", "dt"), ("second", "fcnn"),
         ("flow", "rf"), ("flow", "dt"), ("flow", "fcnn"), ("grid", "cnn")]


@pytest.mark.parametrize("schema,kind", PAIRS)
def test_round_trip_preserves_predictions(tmp_path, schema, kind):
    frame, grids = _frame(schema)
    artifact = train_model(kind, schema, frame, grids, _labels(), class_count=3, settings=SETTINGS, seed=7,
                           training_period="P1", period_weeks=(1, 2), week_origin=0.0)
    path = str(tmp_path / f"{kind}.model")
    size = save_artifact(artifact, path)
    loaded = load_artifact(path)

    assert size == len(artifact_to_bytes(artifact))
    assert (loaded.kind, loaded.schema, loaded.class_count) == (kind, schema, 3)
    assert (loaded.training_period, loaded.period_weeks, loaded.week_origin) == ("P1", (1, 2), 0.0)
    before = LoadedModel(artifact).predict_proba(frame, grids)
    after = LoadedModel(loaded).predict_proba(frame, grids)
    np.testing.assert_array_equal(before, after)
    assert before.shape == (N, 3)


@pytest.mark.parametrize("schema,kind", [("second", "rf"), ("flow", "fcnn"), ("hour", "two-stage")])
def test_same_seed_same_bytes(schema, kind):
    frame, grids = _frame(schema)
    blobs = [artifact_to_bytes(train_model(kind, schema, frame, grids, _labels(), class_count=3,
                                           settings=SETTINGS, seed=3)) for _ in range(2)]
    assert blobs[0] == blobs[1]


def test_network_artifact_records_best_epoch():
    frame, grids = _frame("second")
    artifact = train_model("fcnn", "second", frame, grids, _labels(), class_count=3, settings=SETTINGS, seed=1,
                           validation=(frame, None, _labels()))
    assert 1 <= artifact.best_epoch <= 3
    assert len(artifact.history) == 3


def test_header_layout():
    frame, _ = _frame("second")
    blob = artifact_to_bytes(train_model("dt", "second", frame, None, _labels(), class_count=3,
                                         settings=SETTINGS, seed=0))
    assert blob[:5] == MAGIC
    assert struct.unpack(">HBB", blob[5:9]) == (1, 2, 2)


def test_bad_magic_and_version():
    frame, _ = _frame("second")
    blob = artifact_to_bytes(train_model("dt", "second", frame, None, _labels(), class_count=3,
                                         settings=SETTINGS, seed=0))
    with pytest.raises(ModelFormatError):
        artifact_from_bytes(b"NOTIT" + blob[5:])
    with pytest.raises(ModelFormatError, match="version 9"):
        artifact_from_bytes(MAGIC + struct.pack(">HBB", 9, 2, 2) + blob[9:])
    with pytest.raises(ModelFormatError):
        artifact_from_bytes(blob[:9] + b"garbage")


def test_missing_model_file(tmp_path):
    with pytest.raises(ModelFormatError, match="nothing.model"):
        load_artifact(str(tmp_path / "nothing.model"))


def test_compatibility_table():
    check_compatible("grid", "cnn")
    with pytest.raises(SchemaMismatchError, match="cnn.*flow"):
        check_compatible("flow", "cnn")
    with pytest.raises(UsageError):
        check_compatible("minute", "rf")
    with pytest.raises(UsageError):
        check_compatible("flow", "svm")
