"""
Tests for the iotid command line: exit codes, messages and the stage outputs on disk.
"""

import json
import os

import pandas as pd
import pytest

from conftest import DEVICE_MACS, GATEWAY
from iotid.capture.manifest import mac_to_bytes
from iotid.cli import main
from iotid.core.errors import ConfigValidationError
from iotid.core.types import Settings
from iotid.stages.config_stage import load_and_validate_config
from iotid.synth.frames import tcp_frame

DEV = mac_to_bytes(DEVICE_MACS[0])
GW = mac_to_bytes(GATEWAY)


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    """No ./config.yaml: every command runs on built-in defaults."""
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def one_flow_store(tmp_path, write_pcap, manifest_json):
    """Ingest store of one TCP flow with packets in three distinct seconds."""
    frames = [(t_us, tcp_frame(DEV, GW, "192.168.1.10", "34.100.0.10", 40000, 443, b"\x01" * 40))
              for t_us in (1_000_000, 2_500_000, 4_000_000)]
    pcap = tmp_path / "one.pcap"
    pcap.write_bytes(write_pcap(frames))
    store = str(tmp_path / "store")
    assert main(["ingest", str(pcap), "--manifest", manifest_json, "--out", store]) == 0
    return store


@pytest.fixture
def synth_store(tmp_path):
    scenario = tmp_path / "tiny.json"
    scenario.write_text(json.dumps({"devices": 2, "weeks": 1, "seed": 1}))
    synth_dir = str(tmp_path / "synth")
    store = str(tmp_path / "store")
    assert main(["synth", "--scenario", str(scenario), "--out", synth_dir]) == 0
    assert main(["ingest", os.path.join(synth_dir, "capture.pcap"),
                 "--manifest", os.path.join(synth_dir, "manifest.json"), "--out", store]) == 0
    assert main(["extract", "--store", store, "--schema", "second"]) == 0
    return synth_dir, store


def test_empty_pcap(tmp_path, write_pcap, manifest_json, capsys):
    pcap = tmp_path / "empty.pcap"
    pcap.write_bytes(write_pcap([]))
    code = main(["ingest", str(pcap), "--manifest", manifest_json, "--out", str(tmp_path / "store")])
    assert code == 0
    assert "0 packets" in capsys.readouterr().out
    assert os.path.exists(tmp_path / "store" / "run.log")


def test_missing_manifest(tmp_path, write_pcap, capsys):
    pcap = tmp_path / "empty.pcap"
    pcap.write_bytes(write_pcap([]))
    missing = str(tmp_path / "nowhere.json")
    assert main(["ingest", str(pcap), "--manifest", missing, "--out", str(tmp_path / "store")]) == 2
    assert missing in capsys.readouterr().err


def test_missing_capture(tmp_path, manifest_json, capsys):
    code = main(["ingest", str(tmp_path / "gone.pcap"), "--manifest", manifest_json, "--out", str(tmp_path / "s")])
    assert code == 2
    assert "gone.pcap" in capsys.readouterr().err


def test_bad_pcap_is_a_data_error(tmp_path, manifest_json):
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(b"\x00" * 40)
    assert main(["ingest", str(bad), "--manifest", manifest_json, "--out", str(tmp_path / "s")]) == 2


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["ingest", "x.pcap"]) == 1
    assert "--manifest" in capsys.readouterr().err


def test_unknown_schema_lists_valid_ones(one_flow_store, capsys):
    assert main(["extract", "--store", one_flow_store, "--schema", "minute"]) == 1
    err = capsys.readouterr().err
    for name in ("flow", "grid", "hour", "second"):
        assert name in err


def test_extract_counts(one_flow_store, capsys):
    assert main(["extract", "--store", one_flow_store, "--schema", "second"]) == 0
    assert main(["extract", "--store", one_flow_store, "--schema", "flow"]) == 0
    out = capsys.readouterr().out
    assert "second: 3 rows" in out and "flow: 1 rows" in out
    assert len(pd.read_csv(os.path.join(one_flow_store, "second_windows.csv"))) == 3
    flows = pd.read_csv(os.path.join(one_flow_store, "flow_features.csv"))
    assert len(flows) == 1 and flows.loc[0, "pkts_out"] == 3


def test_extract_all_schemas(one_flow_store):
    assert main(["extract", "--store", one_flow_store]) == 0
    for name in ("hour_windows.csv", "second_windows.csv", "flow_features.csv", "grids_index.csv", "grids.bin",
                 "flows.csv"):
        assert os.path.exists(os.path.join(one_flow_store, name))
    assert os.path.getsize(os.path.join(one_flow_store, "grids.bin")) == 10 * 250


def test_existing_outputs_need_force(one_flow_store, capsys):
    assert main(["extract", "--store", one_flow_store, "--schema", "second"]) == 0
    assert main(["extract", "--store", one_flow_store, "--schema", "second"]) == 1
    assert "--force" in capsys.readouterr().err
    assert main(["extract", "--store", one_flow_store, "--schema", "second", "--force"]) == 0


def test_bad_config_is_a_usage_error(one_flow_store, tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("tree:\n  n_trees: 0\n")
    assert main(["extract", "--store", one_flow_store, "--config", str(config)]) == 1


def test_ingest_counts_match_ground_truth(synth_store):
    synth_dir, store = synth_store
    labels = pd.read_csv(os.path.join(synth_dir, "labels.csv"))
    with open(os.path.join(store, "ingest_summary.json")) as f:
        summary = json.load(f)
    expected = {str(k): int(v) for k, v in labels.groupby("device_id").size().items()}
    assert summary["per_device"] == expected
    assert summary["malformed_packets"] == 0


def test_train_twice_gives_identical_files(synth_store, tmp_path, capsys):
    _, store = synth_store
    paths = [str(tmp_path / f"m{i}.model") for i in (1, 2)]
    for path in paths:
        assert main(["train", "--store", store, "--schema", "second", "--model", "dt",
                     "--periods", "P1:1-1", "--out", path, "--seed", "3"]) == 0
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()
    assert "model: " in capsys.readouterr().out


def test_train_rejects_mismatched_model(synth_store, tmp_path, capsys):
    _, store = synth_store
    code = main(["train", "--store", store, "--schema", "second", "--model", "cnn",
                 "--periods", "P1:1-1", "--out", str(tmp_path / "m.model")])
    assert code == 1
    err = capsys.readouterr().err
    assert "cnn" in err and "second" in err


def test_train_unknown_period(synth_store, tmp_path):
    _, store = synth_store
    assert main(["train", "--store", store, "--schema", "second", "--model", "dt", "--periods", "P1:1-1",
                 "--period", "P9", "--out", str(tmp_path / "m.model")]) == 1


def test_evaluate_untrained_model(synth_store, tmp_path, capsys):
    _, store = synth_store
    missing = str(tmp_path / "never.model")
    assert main(["evaluate", "--store", store, "--model-path", missing, "--out", str(tmp_path / "eval")]) == 2
    assert "never.model" in capsys.readouterr().err


def test_evaluate_saved_model_schema_mismatch(synth_store, tmp_path, capsys):
    _, store = synth_store
    model = str(tmp_path / "dt.model")
    assert main(["train", "--store", store, "--schema", "second", "--model", "dt", "--periods", "P1:1-1",
                 "--out", model]) == 0
    code = main(["evaluate", "--store", store, "--schema", "flow", "--model-path", model,
                 "--out", str(tmp_path / "eval")])
    assert code == 1
    err = capsys.readouterr().err
    assert "second" in err and "flow" in err


def test_evaluate_then_report(synth_store, tmp_path, capsys):
    synth_dir, store = synth_store
    eval_dir = str(tmp_path / "eval")
    assert main(["evaluate", "--store", store, "--schema", "second", "--model", "dt",
                 "--periods", "P1:1-1", "--out", eval_dir]) == 0
    assert os.path.exists(os.path.join(eval_dir, "report_dt_second_P1.json"))
    weekly = pd.read_csv(os.path.join(eval_dir, "weekly_dt_second_P1.csv"))
    assert weekly["week"].tolist() == [1]

    report_dir = str(tmp_path / "report")
    assert main(["report", eval_dir, "--manifest", os.path.join(synth_dir, "manifest.json"),
                 "--out", report_dir]) == 0
    summary = pd.read_csv(os.path.join(report_dir, "degradation.csv"))
    assert set(summary["period"]) == {"P1", "mean"}
    assert os.path.exists(os.path.join(report_dir, "plot_dt_second.csv"))
    assert "dt" in capsys.readouterr().out


def test_report_without_inputs(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    assert main(["report", str(empty), "--out", str(tmp_path / "r")]) == 2


def test_ingest_refuses_existing_manifest(synth_store, capsys):
    synth_dir, store = synth_store
    for name in ("packets.csv", "dns.csv", "tls.csv"):
        os.remove(os.path.join(store, name))
    capsys.readouterr()
    code = main(["ingest", os.path.join(synth_dir, "capture.pcap"),
                 "--manifest", os.path.join(synth_dir, "manifest.json"), "--out", store])
    assert code == 1
    err = capsys.readouterr().err
    assert "manifest.json" in err and "--force" in err
    assert not os.path.exists(os.path.join(store, "packets.csv"))


def test_ingest_refuses_existing_summary(synth_store, capsys):
    synth_dir, store = synth_store
    for name in ("packets.csv", "dns.csv", "tls.csv", "manifest.json"):
        os.remove(os.path.join(store, name))
    capsys.readouterr()
    code = main(["ingest", os.path.join(synth_dir, "capture.pcap"),
                 "--manifest", os.path.join(synth_dir, "manifest.json"), "--out", store])
    assert code == 1
    assert "ingest_summary.json" in capsys.readouterr().err


def test_extracted_schemas_agree_on_device_bytes(synth_store):
    synth_dir, store = synth_store
    assert main(["extract", "--store", store, "--schema", "all", "--force"]) == 0

    labels = pd.read_csv(os.path.join(synth_dir, "labels.csv"))
    expected = {int(d): int(v) for d, v in labels.groupby("device_id")["wire_len"].sum().items()}
    assert len(expected) == 2

    with open(os.path.join(store, "ingest_summary.json")) as f:
        summary = json.load(f)
    assert {int(d): v for d, v in summary["per_device_bytes"].items()} == expected

    def per_device(file_name, column):
        table = pd.read_csv(os.path.join(store, file_name))
        return {int(d): int(round(v)) for d, v in table.groupby("device_id")[column].sum().items()}

    assert per_device("second_windows.csv", "bytes_sum") == expected
    assert per_device("hour_windows.csv", "flow_volume") == expected

    flows = pd.read_csv(os.path.join(store, "flows.csv"))
    flows["bytes"] = flows["bytes_out"] + flows["bytes_in"]
    assert {int(d): int(v) for d, v in flows.groupby("device_id")["bytes"].sum().items()} == expected
    features = pd.read_csv(os.path.join(store, "flow_features.csv"))
    features["bytes"] = features["bytes_out"] + features["bytes_in"]
    assert {int(d): int(v) for d, v in features.groupby("device_id")["bytes"].sum().items()} == expected


def test_extract_to_separate_directory(synth_store, tmp_path):
    _, store = synth_store
    feats = str(tmp_path / "feats")
    assert main(["extract", "--store", store, "--schema", "flow", "--out", feats]) == 0
    for name in ("flow_features.csv", "flows.csv", "manifest.json", "run.log"):
        assert os.path.exists(os.path.join(feats, name)), name
    assert not os.path.exists(os.path.join(store, "flow_features.csv"))
    assert not os.path.exists(os.path.join(store, "flows.csv"))
    with open(os.path.join(store, "manifest.json")) as a, open(os.path.join(feats, "manifest.json")) as b:
        assert json.load(a) == json.load(b)

    assert main(["train", "--store", feats, "--schema", "flow", "--model", "dt", "--periods", "P1:1-1",
                 "--out", str(tmp_path / "m.model")]) == 0
    assert main(["extract", "--store", store, "--schema", "flow", "--out", feats]) == 1


def test_default_workers_follow_cpu_count():
    settings = load_and_validate_config(None)
    assert settings.workers == (os.cpu_count() or 1)
    assert settings.tree.workers == settings.workers
    assert Settings().workers == (os.cpu_count() or 1)


@pytest.mark.parametrize("yaml_text", ["grid:\n  cols: 251\n", "grid:\n  cols: 33\n", "flow:\n  max_packets: 51\n"])
def test_config_limits_follow_the_stores(tmp_path, yaml_text):
    config = tmp_path / "limits.yaml"
    config.write_text(yaml_text)
    with pytest.raises(ConfigValidationError):
        load_and_validate_config(str(config))


def test_widest_grid_is_accepted(tmp_path):
    config = tmp_path / "wide.yaml"
    config.write_text("grid:\n  cols: 250\nflow:\n  max_packets: 50\n")
    settings = load_and_validate_config(str(config))
    assert (settings.grid.cols, settings.flow.max_packets) == (250, 50)
