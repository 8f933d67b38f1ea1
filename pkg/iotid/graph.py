from __future__ import annotations

import os
from typing import List, Optional, Tuple

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, Field

from .stages.config_stage import load_and_validate_config
from .stages.evaluate_stage import evaluate
from .stages.extract_stage import extract
from .stages.ingest_stage import ingest
from .stages.report_stage import report
from .stages.synth_stage import CAPTURE_FILE, MANIFEST_FILE, synth

# (schema, model) pairs run by the pipeline unless told otherwise
DEFAULT_PAIRS: List[Tuple[str, str]] = [
    ("hour", "two-stage"),
    ("grid", "cnn"),
    ("second", "dt"),
    ("second", "rf"),
    ("flow", "rf"),
    ("flow", "fcnn"),
]


class PipelineState(BaseModel):
    scenario_path: str
    outputs_dir: str
    config_path: Optional[str] = None
    periods: Optional[str] = None
    seed: Optional[int] = None
    pairs: List[Tuple[str, str]] = Field(default_factory=lambda: list(DEFAULT_PAIRS))
    force: bool = False

    # intermediate products
    synth_dir: str = ""
    store_dir: str = ""
    eval_dir: str = ""
    report_dir: str = ""
    report_paths: List[str] = Field(default_factory=list)
    summary: List[dict] = Field(default_factory=list)


def node_load_config(state: PipelineState) -> PipelineState:
    load_and_validate_config(state.config_path)  # validation side-effect
    state.synth_dir = os.path.join(state.outputs_dir, "synth")
    state.store_dir = os.path.join(state.outputs_dir, "store")
    state.eval_dir = os.path.join(state.outputs_dir, "eval")
    state.report_dir = os.path.join(state.outputs_dir, "report")
    return state


def node_synth(state: PipelineState) -> PipelineState:
    synth(state.scenario_path, state.synth_dir, seed=state.seed, force=state.force)
    return state


def node_ingest(state: PipelineState) -> PipelineState:
    ingest([os.path.join(state.synth_dir, CAPTURE_FILE)], os.path.join(state.synth_dir, MANIFEST_FILE),
           state.store_dir, force=state.force)
    return state


def node_extract(state: PipelineState) -> PipelineState:
    cfg = load_and_validate_config(state.config_path)
    schemas = sorted({schema for schema, _ in state.pairs})
    extract(state.store_dir, schemas, settings=cfg, force=state.force)
    return state


def node_evaluate(state: PipelineState) -> PipelineState:
    cfg = load_and_validate_config(state.config_path)
    for schema, kind in state.pairs:
        evaluate(state.store_dir, state.eval_dir, schema=schema, kind=kind, settings=cfg,
                 periods=state.periods, seed=state.seed, force=state.force)
    state.report_paths = [state.eval_dir]
    return state


def node_report(state: PipelineState) -> PipelineState:
    summary = report(state.report_paths, state.report_dir,
                     manifest_path=os.path.join(state.store_dir, MANIFEST_FILE), force=state.force)
    state.summary = summary.to_dict(orient="records")
    return state


def build_graph() -> StateGraph:
    g = StateGraph(PipelineState)
    g.add_node("validate_config", node_load_config)
    g.add_node("synth", node_synth)
    g.add_node("ingest", node_ingest)
    g.add_node("extract", node_extract)
    g.add_node("evaluate", node_evaluate)
    g.add_node("report", node_report)

    g.set_entry_point("validate_config")
    g.add_edge("validate_config", "synth")
    g.add_edge("synth", "ingest")
    g.add_edge("ingest", "extract")
    g.add_edge("extract", "evaluate")
    g.add_edge("evaluate", "report")
    g.add_edge("report", END)
    return g
