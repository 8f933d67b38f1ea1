from __future__ import annotations

from typing import Iterable, List, Optional, Tuple

import pandas as pd

from .graph import DEFAULT_PAIRS, PipelineState, build_graph


def run_pipeline(
    *,
    scenario_path: str,
    outputs_dir: str,
    config_path: Optional[str] = None,
    periods: Optional[str] = None,
    seed: Optional[int] = None,
    pairs: Optional[Iterable[Tuple[str, str]]] = None,
    force: bool = False,
) -> pd.DataFrame:
    """synth → ingest → extract → evaluate → report; returns the degradation table."""
    graph = build_graph().compile()
    state = PipelineState(
        scenario_path=scenario_path,
        outputs_dir=outputs_dir,
        config_path=config_path,
        periods=periods,
        seed=seed,
        pairs=list(pairs) if pairs else list(DEFAULT_PAIRS),
        force=force,
    )
    final_state = graph.invoke(state)
    # LangGraph may return a dict-like state; support both
    if isinstance(final_state, dict):
        summary: List[dict] = final_state.get("summary") or []
    else:
        summary = getattr(final_state, "summary", None) or []
    return pd.DataFrame(summary)
