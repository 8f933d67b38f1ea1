from __future__ import annotations

import os
from typing import Any, Dict, Optional

import yaml

from ..core.errors import ConfigValidationError
from ..core.types import EvalSettings, FlowSettings, GridSettings, NetworkSettings, Settings, TreeSettings
from ..evaluation.periods import parse_periods
from ..features.store import FLOW_SLOTS, HEAD_BYTES

DEFAULT_CONFIG = "config.yaml"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigValidationError(message)


def _section(raw: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = raw.get(name) or {}
    _require(isinstance(section, dict), f"'{name}' must be a mapping")
    return section


def _max_features(value: Any) -> Optional[object]:
    if value is None or value == "sqrt":
        return value
    _require(isinstance(value, int) and not isinstance(value, bool) and value > 0,
             "tree.max_features must be 'sqrt', a positive integer or null")
    return value


def settings_from_dict(raw: Dict[str, Any]) -> Settings:
    flow_raw = _section(raw, "flow")
    grid_raw = _section(raw, "grid")
    tree_raw = _section(raw, "tree")
    net_raw = _section(raw, "network")
    eval_raw = _section(raw, "evaluation")

    flow = FlowSettings(
        idle_timeout=float(flow_raw.get("idle_timeout", 10.0)),
        active_timeout=float(flow_raw.get("active_timeout", 30.0)),
        max_packets=int(flow_raw.get("max_packets", 50)),
    )
    _require(flow.idle_timeout > 0 and flow.active_timeout > 0, "flow timeouts must be positive")
    _require(0 < flow.max_packets <= FLOW_SLOTS, f"flow.max_packets must lie in 1..{FLOW_SLOTS}")

    grid = GridSettings(rows=int(grid_raw.get("rows", 10)), cols=int(grid_raw.get("cols", 250)))
    _require(grid.rows > 0, "grid needs at least one row")
    _require(34 <= grid.cols <= HEAD_BYTES,
             f"grid.cols must lie in 34..{HEAD_BYTES}, the frame bytes kept per stored packet")

    max_depth = tree_raw.get("max_depth")
    tree = TreeSettings(
        n_trees=int(tree_raw.get("n_trees", 100)),
        max_features=_max_features(tree_raw.get("max_features", "sqrt")),
        bootstrap=bool(tree_raw.get("bootstrap", True)),
        max_depth=None if max_depth is None else int(max_depth),
    )
    _require(tree.n_trees >= 1, "tree.n_trees must be at least 1")
    _require(tree.max_depth is None or tree.max_depth >= 1, "tree.max_depth must be null or >= 1")

    network = NetworkSettings(
        epochs=int(net_raw.get("epochs", 50)),
        batch_size=int(net_raw.get("batch_size", 128)),
        learning_rate=float(net_raw.get("learning_rate", 0.01)),
        momentum=float(net_raw.get("momentum", 0.9)),
        hidden=tuple(int(h) for h in net_raw.get("hidden", (128, 64))),
        filters=tuple(int(f) for f in net_raw.get("filters", (8, 16))),
        kernel=int(net_raw.get("kernel", 3)),
        dropout=float(net_raw.get("dropout", 0.5)),
        validation_fraction=float(net_raw.get("validation_fraction", 0.1)),
    )
    _require(network.epochs >= 1 and network.batch_size >= 1, "network epochs and batch_size must be >= 1")
    _require(network.learning_rate > 0, "network.learning_rate must be positive")
    _require(0 <= network.momentum < 1, "network.momentum must lie in [0, 1)")
    _require(len(network.filters) == 2, "network.filters lists exactly two convolution widths")
    _require(network.kernel % 2 == 1, "network.kernel must be odd")
    _require(0 <= network.dropout < 1, "network.dropout must lie in [0, 1)")
    _require(0 <= network.validation_fraction < 1, "network.validation_fraction must lie in [0, 1)")

    week_origin = eval_raw.get("week_origin")
    evaluation = EvalSettings(
        train_fraction=float(eval_raw.get("train_fraction", 0.8)),
        periods=str(eval_raw.get("periods", EvalSettings.periods)),
        week_origin=None if week_origin is None else float(week_origin),
    )
    _require(0 < evaluation.train_fraction < 1, "evaluation.train_fraction must lie in (0, 1)")
    try:
        parse_periods(evaluation.periods)
    except Exception as exc:
        raise ConfigValidationError(f"evaluation.periods: {exc}") from None

    seed = int(raw.get("seed", 0))
    workers_raw = raw.get("workers", "auto")
    workers = (os.cpu_count() or 1) if workers_raw in (None, "auto") else int(workers_raw)
    _require(workers >= 1, "workers must be at least 1")
    tree.workers = workers
    return Settings(flow=flow, grid=grid, tree=tree, network=network, evaluation=evaluation,
                    seed=seed, workers=workers)


def load_and_validate_config(path: Optional[str] = None) -> Settings:
    """Settings from YAML; with no path, ``config.yaml`` is used when present, else defaults."""
    if path is None:
        if not os.path.exists(DEFAULT_CONFIG):
            return settings_from_dict({})
        path = DEFAULT_CONFIG
    if not os.path.exists(path):
        raise ConfigValidationError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigValidationError(f"{path} is not valid YAML: {exc}") from None
    _require(isinstance(raw, dict), f"{path} must hold a mapping")
    return settings_from_dict(raw)
