from __future__ import annotations

import logging
import os
from typing import Optional

from ..capture.manifest import save_manifest
from ..synth.generator import SynthResult, generate_scenario
from ..synth.profiles import load_scenario
from ..utils.jsonio import write_bytes_atomic
from .outputs import claim_outputs

logger = logging.getLogger(__name__)

CAPTURE_FILE = "capture.pcap"
MANIFEST_FILE = "manifest.json"
LABELS_FILE = "labels.csv"


def synth(scenario_path: str, out_dir: str, *, seed: Optional[int] = None, force: bool = False) -> SynthResult:
    """Generate a scenario's capture, manifest and ground-truth labels into ``out_dir``."""
    scenario = load_scenario(scenario_path)
    paths = [os.path.join(out_dir, name) for name in (CAPTURE_FILE, MANIFEST_FILE, LABELS_FILE)]
    claim_outputs(paths, force)

    result = generate_scenario(scenario, seed)
    write_bytes_atomic(result.pcap, paths[0])
    save_manifest(result.manifest, paths[1])
    result.labels.to_csv(paths[2], index=False)
    logger.info("scenario %s: %d devices over %d weeks", scenario_path, len(scenario.profiles), scenario.weeks)

    print(f"{len(result.labels)} packets written to {paths[0]}")
    counts = result.labels.groupby("device_id").size()
    for entry in result.manifest.entries:
        print(f"  device {entry.device_id} ({entry.name}): {int(counts.get(entry.device_id, 0))} packets")
    return result
