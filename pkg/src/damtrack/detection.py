"""Detection provisioning: scripted replay, confidence filtering, NMS, scheduling.

The detector contract is detect(frame, roi) -> DetectionSet in full-frame
coordinates. The reference implementation replays a JSON Lines file, one
object per frame: {"t": int, "detections": [{"x","y","w","h","score"}, ...]}.
Frames absent from the file have zero detections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .geometry import Box, FrameDims, iou, roi_crop
from .media import Frame


@dataclass(frozen=True)
class Detection:
    box: Box
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0,1], got {self.score}")


@dataclass
class DetectionSet:
    t: int
    detections: list[Detection] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)


@dataclass(frozen=True)
class SourceConfig:
    tau_s: float = 0.45  # confidence floor
    nms_iou: float = 0.50
    stride_delta: int = 3
    kappa: float = 2.0  # ROI scale during stable tracking

    def __post_init__(self):
        if self.stride_delta < 1:
            raise ValueError("stride_delta must be >= 1")
        if not 0.0 <= self.tau_s <= 1.0 or not 0.0 <= self.nms_iou <= 1.0:
            raise ValueError("tau_s and nms_iou must be in [0,1]")
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")


class DetectorInterface:
    """Behavioral contract: boxes in full-frame coordinates, ROI-respecting."""

    def detect(self, frame: Frame, roi: Box | None = None) -> DetectionSet:
        raise NotImplementedError


class ScriptedDetector(DetectorInterface):
    """Deterministic replay of a detections file.

    An ROI restricts the returned set to boxes intersecting it, emulating
    ROI-limited inference without re-running anything.
    """

    def __init__(self, per_frame: dict[int, list[Detection]]):
        self.per_frame = per_frame

    @classmethod
    def from_file(cls, path: str) -> "ScriptedDetector":
        return cls(read_detections_file(path))

    def detect(self, frame: Frame, roi: Box | None = None) -> DetectionSet:
        dets = self.per_frame.get(frame.index, [])
        if roi is not None:
            dets = [d for d in dets if _intersects(d.box, roi)]
        return DetectionSet(frame.index, list(dets))


def _intersects(a: Box, b: Box) -> bool:
    return a.x < b.x2 and b.x < a.x2 and a.y < b.y2 and b.y < a.y2


def read_detections_file(path: str) -> dict[int, list[Detection]]:
    per_frame: dict[int, list[Detection]] = {}
    with open(path, "r", encoding="ascii") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                t = int(rec["t"])
                dets = [
                    Detection(Box.from_dict(d), float(d["score"]))
                    for d in rec["detections"]
                ]
            except (KeyError, ValueError, TypeError) as e:
                raise ValueError(f"{path}:{line_no}: bad detection record ({e})") from None
            per_frame[t] = dets
    return per_frame


def write_detections_file(path: str, per_frame: dict[int, list[Detection]]) -> None:
    with open(path, "w", encoding="ascii") as f:
        for t in sorted(per_frame):
            rec = {
                "t": t,
                "detections": [
                    {**d.box.to_dict(), "score": round(d.score, 6)}
                    for d in per_frame[t]
                ],
            }
            f.write(json.dumps(rec) + "\n")


def filter_confident(dets: DetectionSet, tau_s: float) -> DetectionSet:
    """Keep detections scoring at least tau_s, order preserved."""
    return DetectionSet(dets.t, [d for d in dets if d.score >= tau_s])


def nms(dets: DetectionSet, iou_thresh: float) -> DetectionSet:
    """Greedy score-descending suppression; ties keep the earlier detection."""
    order = sorted(range(len(dets.detections)),
                   key=lambda i: (-dets.detections[i].score, i))
    kept: list[Detection] = []
    for i in order:
        d = dets.detections[i]
        if all(iou(d.box, k.box) < iou_thresh for k in kept):
            kept.append(d)
    return DetectionSet(dets.t, kept)


def schedule(t: int, delta: int, occ_prev: bool) -> tuple[bool, bool]:
    """Whether to run detection this frame, and whether over the full frame.

    Detection runs on stride frames or always while the previous frame ended
    occluded; occlusion also forces the full-frame pass (no ROI).
    """
    if t < 0 or delta < 1:
        raise ValueError("t must be >= 0 and delta >= 1")
    run = (t % delta == 0) or occ_prev
    return run, occ_prev


def provide(detector: DetectorInterface, frame: Frame, prev_box: Box,
            run: bool, full_frame: bool, last_set: DetectionSet,
            cfg: SourceConfig) -> DetectionSet:
    """Fresh filtered detections when scheduled, otherwise the stale set."""
    if not run:
        return last_set
    roi = None if full_frame else roi_crop(prev_box, cfg.kappa, frame.dims)
    raw = detector.detect(frame, roi)
    return nms(filter_confident(raw, cfg.tau_s), cfg.nms_iou)
