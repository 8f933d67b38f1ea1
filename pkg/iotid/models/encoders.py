"""Turn stored feature rows into model inputs.

Encoders are fitted on training rows only and travel inside the model file.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..features.store import parse_bag
from .vocabulary import Vocabulary

FLOW_NUMERIC = (
    "src_port", "dest_port", "bytes_out", "bytes_in", "pkts_out", "pkts_in",
    "ipt_mean", "ipt_std", "ipt_var", "ipt_skew", "ipt_kurtosis",
    "b_mean", "b_std", "b_var", "b_skew", "b_kurtosis", "duration", "protocol",
)
SECOND_NUMERIC = ("bytes_sum", "bytes_avg", "bytes_std")
HOUR_NUMERIC = ("flow_volume", "flow_duration", "flow_rate", "sleep_time", "dns_interval", "ntp_interval")
HOUR_BAGS = ("bag_of_ports", "bag_of_domains", "bag_of_ciphers")
_BAG_PREFIX = {"bag_of_ports": "port", "bag_of_domains": "domain", "bag_of_ciphers": "cipher"}


class TabularEncoder:
    """Numeric columns, plus an optional categorical column mapped through a Vocabulary.

    With ``standardize`` every column is shifted and scaled by the training
    mean and standard deviation (a zero deviation scales by 1).
    """

    def __init__(self, columns: Sequence[str], categorical: Optional[str] = None, standardize: bool = False):
        self.columns = tuple(columns)
        self.categorical = categorical
        self.standardize = standardize
        self.vocabulary: Optional[Vocabulary] = None
        self.mean: Optional[np.ndarray] = None
        self.scale: Optional[np.ndarray] = None

    @property
    def width(self) -> int:
        return len(self.columns) + (1 if self.categorical else 0)

    def _raw(self, frame: pd.DataFrame) -> np.ndarray:
        X = frame.loc[:, list(self.columns)].to_numpy(dtype=np.float64)
        if self.categorical:
            vocab = self.vocabulary or Vocabulary()
            codes = np.array([vocab.index_of(str(v)) for v in frame[self.categorical]], dtype=np.float64)
            X = np.column_stack([X, codes]) if len(X) else np.zeros((0, self.width))
        return X

    def fit(self, frame: pd.DataFrame) -> "TabularEncoder":
        if self.categorical:
            self.vocabulary = Vocabulary.build([[v] for v in frame[self.categorical].astype(str)])
        if self.standardize:
            X = self._raw(frame)
            self.mean = X.mean(axis=0) if len(X) else np.zeros(self.width)
            std = X.std(axis=0) if len(X) else np.ones(self.width)
            self.scale = np.where(std > 0, std, 1.0)
        return self

    def transform(self, frame: pd.DataFrame, grids: Optional[np.ndarray] = None) -> np.ndarray:
        X = self._raw(frame)
        if self.standardize and self.mean is not None:
            X = (X - self.mean) / self.scale
        return X

    def get_state(self) -> Dict[str, Any]:
        return {
            "type": "tabular",
            "columns": list(self.columns),
            "categorical": self.categorical,
            "standardize": self.standardize,
            "vocabulary": self.vocabulary.get_state() if self.vocabulary else None,
            "mean": self.mean,
            "scale": self.scale,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "TabularEncoder":
        enc = cls(state["columns"], state["categorical"], state["standardize"])
        if state["vocabulary"] is not None:
            enc.vocabulary = Vocabulary.from_state(state["vocabulary"])
        enc.mean = state["mean"]
        enc.scale = state["scale"]
        return enc


class GridEncoder:
    """Byte grids scaled to [0, 1] with a trailing channel axis."""

    def fit(self, frame: pd.DataFrame) -> "GridEncoder":
        return self

    def transform(self, frame: pd.DataFrame, grids: Optional[np.ndarray] = None) -> np.ndarray:
        if grids is None:
            raise ValueError("grid rows need their cell array")
        return (np.asarray(grids, dtype=np.float32) / np.float32(255.0))[..., None]

    def get_state(self) -> Dict[str, Any]:
        return {"type": "grid"}


@dataclass
class HourBatch:
    ports: List[List[str]]
    domains: List[List[str]]
    ciphers: List[List[str]]
    numeric: np.ndarray

    def __len__(self) -> int:
        return len(self.numeric)

    def union_bags(self) -> List[List[str]]:
        """All three bags of each row in one, tokens prefixed by their bag."""
        return [
            [f"port:{t}" for t in p] + [f"domain:{t}" for t in d] + [f"cipher:{t}" for t in c]
            for p, d, c in zip(self.ports, self.domains, self.ciphers)
        ]


class HourEncoder:
    """Hour-window rows as three token bags plus the six numeric window features."""

    def fit(self, frame: pd.DataFrame) -> "HourEncoder":
        return self

    def transform(self, frame: pd.DataFrame, grids: Optional[np.ndarray] = None) -> HourBatch:
        bags = {name: [parse_bag(v) for v in frame[name].astype(str)] for name in HOUR_BAGS}
        numeric = frame.loc[:, list(HOUR_NUMERIC)].to_numpy(dtype=np.float64)
        return HourBatch(bags["bag_of_ports"], bags["bag_of_domains"], bags["bag_of_ciphers"], numeric)

    def get_state(self) -> Dict[str, Any]:
        return {"type": "hour"}


NETWORK_KINDS = ("fcnn", "cnn")


def make_encoder(schema: str, kind: str):
    """Encoder matching a (schema, model kind) pair."""
    if schema == "grid":
        return GridEncoder()
    if schema == "hour" and kind in ("two-stage", "nbm"):
        return HourEncoder()
    standardize = kind in NETWORK_KINDS
    if schema == "flow":
        return TabularEncoder(FLOW_NUMERIC, categorical="domain", standardize=standardize)
    if schema == "second":
        return TabularEncoder(SECOND_NUMERIC, standardize=standardize)
    if schema == "hour":
        return TabularEncoder(HOUR_NUMERIC, standardize=standardize)
    raise ValueError(f"no encoder for schema '{schema}'")


def encoder_from_state(state: Dict[str, Any]):
    kind = state["type"]
    if kind == "tabular":
        return TabularEncoder.from_state(state)
    if kind == "grid":
        return GridEncoder()
    if kind == "hour":
        return HourEncoder()
    raise ValueError(f"unknown encoder type '{kind}'")
