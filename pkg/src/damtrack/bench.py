"""Suite benchmarking: run the tracking session over scenarios and collect
metrics. Works from in-memory scenario outputs or from scenario directories
on disk, so tests and the command line share one code path."""

from __future__ import annotations

import os
from dataclasses import replace
from typing import Iterable, Sequence

from .detection import ScriptedDetector
from .media import load_sequence
from .metrics import SequenceResult, evaluate, summarize
from .pipeline import PipelineConfig, TrackerSession, run_sequence
from .synth import ScenarioOutput, read_events_file, read_gt_file


class ScenarioRun:
    """Everything produced by one tracked scenario."""

    def __init__(self, name: str, result: SequenceResult,
                 events: Sequence[tuple[int, int]],
                 session: TrackerSession) -> None:
        self.name = name
        self.result = result
        self.events = list(events)
        self.session = session


def run_scenario(out: ScenarioOutput, config: PipelineConfig) -> ScenarioRun:
    detector = ScriptedDetector(out.detections)
    gt = [None if occ else box
          for box, occ in zip(out.gt_boxes, out.occluded)]
    outputs, times, session = run_sequence(
        out.frames(), out.init_box, detector, config)
    result = evaluate(outputs, gt, times)
    return ScenarioRun(out.spec.name, result, out.events, session)


def run_disk_scenario(path: str, config: PipelineConfig) -> ScenarioRun:
    frames = load_sequence(os.path.join(path, "frames"))
    detector = ScriptedDetector.from_file(os.path.join(path, "detections.jsonl"))
    gt, _ = read_gt_file(os.path.join(path, "gt.jsonl"))
    events = read_events_file(os.path.join(path, "events.json"))
    init_box = gt[0]
    if init_box is None:
        raise ValueError(f"{path}: ground truth is occluded at frame 0")
    outputs, times, session = run_sequence(frames, init_box, detector, config)
    result = evaluate(outputs, gt, times)
    return ScenarioRun(os.path.basename(os.path.normpath(path)), result,
                       events, session)


def discover_scenarios(suite_dir: str) -> list[str]:
    """Scenario subdirectories of suite_dir, sorted by name."""
    paths = []
    for entry in sorted(os.listdir(suite_dir)):
        full = os.path.join(suite_dir, entry)
        if os.path.isdir(full) and os.path.isfile(os.path.join(full, "gt.jsonl")):
            paths.append(full)
    if not paths:
        raise ValueError(f"{suite_dir}: no scenario directories found")
    return paths


def suite_report(runs: Iterable[ScenarioRun]) -> dict:
    runs = list(runs)
    report = summarize([(r.name, r.result, r.events) for r in runs])
    total_frames = sum(len(r.result.ious) for r in runs)
    dam_ns = sum(r.session.dam.spent_ns for r in runs)
    report["timing"]["dam_ms_per_frame"] = dam_ns / total_frames / 1e6
    return report


def ladder_configs(base: PipelineConfig) -> list[tuple[str, PipelineConfig]]:
    """Component ladder from bare tracker to the full system.

    The held-box protocol rides with the detector rung: it is driven by
    detections (the overlap set steers its size), and without it the holding
    reference follows the failing tracker, which starves every later stage.
    """
    return [
        ("tracker_only", replace(base, use_detector=False, use_ram=False,
                                 use_drm=False, use_held=False)),
        ("with_detector", replace(base, use_detector=True, use_ram=False,
                                  use_drm=False, use_held=True)),
        ("with_ram", replace(base, use_detector=True, use_ram=True,
                             use_drm=False, use_held=True)),
        ("full", replace(base, use_detector=True, use_ram=True,
                         use_drm=True, use_held=True)),
    ]


def capacity_configs(base: PipelineConfig,
                     capacities: Sequence[int]) -> list[tuple[str, PipelineConfig]]:
    """One config per memory capacity, both buffers set to the same size."""
    out = []
    for cap in capacities:
        dam = replace(base.dam, ram_capacity=cap, drm_capacity=cap)
        out.append((f"ram_drm={cap}", replace(base, dam=dam)))
    return out
