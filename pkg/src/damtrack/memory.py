"""Dual-buffer target memory with distractor penalization.

Two bounded FIFO buffers back the tracker: a recent-appearance buffer (RAM) of
geometrically verified boxes, and a stable-anchor buffer (DRM) promoted from
RAM when appearance agrees over a sliding window. A third FIFO holds negative
(distractor) descriptors used to penalize recovery candidates.
"""

from __future__ import annotations

import math
import time
import zlib
from collections import deque
from dataclasses import dataclass
from statistics import median
from typing import Callable

from .appearance import Descriptor, cosine
from .geometry import Box, area, iou


@dataclass(frozen=True)
class DamConfig:
    """Capacities, gates, and scoring weights for the memory."""

    ram_capacity: int = 10
    drm_capacity: int = 10
    tau_in: float = 0.50  # admission IoU gate
    tau_a: float = 0.20  # admission relative-area gate
    tau_sim: float = 0.85  # promotion window similarity
    window_w: int = 5
    m_min: int = 3
    lambda_iou: float = 0.4
    lambda_app: float = 0.3
    lambda_mot: float = 0.2
    lambda_time: float = 0.1
    alpha: float = 0.05  # age decay for anchor scoring
    gamma: float = 0.25  # distractor penalty weight
    tau_acc: float = 0.30  # minimum accepted anchor score
    neg_capacity: int = 20
    epsilon: float = 1e-6

    def __post_init__(self):
        if min(self.ram_capacity, self.drm_capacity, self.neg_capacity) < 1:
            raise ValueError("capacities must be >= 1")
        if self.window_w < 1 or self.m_min < 1:
            raise ValueError("window_w and m_min must be >= 1")
        for name in ("tau_in", "tau_a", "tau_sim"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        for name in ("lambda_iou", "lambda_app", "lambda_mot", "lambda_time",
                     "alpha", "gamma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class RamEntry:
    box: Box
    descriptor: Descriptor
    timestamp: int


@dataclass(frozen=True)
class DrmEntry:
    box: Box
    descriptor: Descriptor
    promoted_at: int


class NegativeBank:
    """Bounded FIFO of distractor descriptors; duplicates allowed."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Descriptor] = deque(maxlen=capacity)

    def add(self, descriptor: Descriptor) -> None:
        self._items.append(descriptor)

    def max_cosine(self, descriptor: Descriptor) -> float:
        """Highest cosine to any stored negative; 0 for an empty bank."""
        best = 0.0
        for neg in self._items:
            c = cosine(descriptor, neg)
            if c > best:
                best = c
        return best

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


def score_anchor(entry: DrmEntry, b_ref: Box, phi_ref: Descriptor,
                 pi_t: float, t: int, cfg: DamConfig) -> float:
    """Raw anchor score: weighted IoU, appearance, motion prior, and recency."""
    if t < entry.promoted_at:
        raise ValueError(f"t={t} precedes anchor promotion time {entry.promoted_at}")
    return (
        cfg.lambda_iou * iou(entry.box, b_ref)
        + cfg.lambda_app * cosine(entry.descriptor, phi_ref)
        + cfg.lambda_mot * pi_t
        + cfg.lambda_time * math.exp(-cfg.alpha * (t - entry.promoted_at))
    )


def penalized_score(s: float, psi: Descriptor, bank: NegativeBank,
                    cfg: DamConfig) -> float:
    """Raw score minus gamma times the best cosine to the negative bank."""
    if len(bank) == 0:
        return s
    return s - cfg.gamma * bank.max_cosine(psi)


class DistractorAwareMemory:
    """RAM + DRM + negative bank for one tracking session.

    All mutating and scoring entry points are self-timed into ``spent_ns`` so
    benchmarks can report pure memory-maintenance cost.
    """

    def __init__(self, cfg: DamConfig | None = None):
        self.cfg = cfg or DamConfig()
        self.ram: deque[RamEntry] = deque(maxlen=self.cfg.ram_capacity)
        self.drm: deque[DrmEntry] = deque(maxlen=self.cfg.drm_capacity)
        self.bank = NegativeBank(self.cfg.neg_capacity)
        self.admission_log: list[dict] = []
        self.promotion_log: list[dict] = []
        self.spent_ns = 0

    def median_area(self) -> float | None:
        """Median area of RAM boxes; None when RAM is empty."""
        if not self.ram:
            return None
        return float(median(area(e.box) for e in self.ram))

    def ram_admit(self, candidate: Box, descriptor: Descriptor,
                  prev: Box, t: int) -> bool:
        """Gate a candidate against the previous hypothesis and admit on pass.

        Both gates must hold: IoU to prev at least tau_in, and relative area
        deviation from the RAM median within tau_a. An empty RAM compares the
        candidate against its own area, so the area gate passes.
        """
        start = time.perf_counter_ns()
        cfg = self.cfg
        overlap = iou(candidate, prev)
        ref_area = self.median_area()
        if ref_area is None:
            ref_area = area(candidate)
        area_dev = abs(area(candidate) - ref_area) / (ref_area + cfg.epsilon)
        admitted = overlap >= cfg.tau_in and area_dev <= cfg.tau_a
        if admitted:
            self.ram.append(RamEntry(candidate, descriptor, t))
        self.admission_log.append(
            {"t": t, "iou": overlap, "area_dev": area_dev, "admitted": admitted}
        )
        self.spent_ns += time.perf_counter_ns() - start
        return admitted

    def try_promote(self, t: int) -> bool:
        """Promote the newest RAM entry into DRM if its window agrees.

        Counts entries among the last window_w RAM entries (newest included)
        whose descriptor cosine to the newest is at least tau_sim; promotion
        needs m_min agreeing entries. Anchors nearly identical to an existing
        one (cosine >= 0.98) are skipped to keep the buffer diverse.
        """
        start = time.perf_counter_ns()
        if not self.ram:
            raise ValueError("try_promote on empty RAM")
        newest = self.ram[-1]
        if newest.timestamp != t:
            raise ValueError(f"newest RAM timestamp {newest.timestamp} != t={t}")
        cfg = self.cfg
        window = list(self.ram)[-cfg.window_w:]
        count = sum(
            1 for e in window if cosine(e.descriptor, newest.descriptor) >= cfg.tau_sim
        )
        promoted = False
        duplicate = False
        if count >= cfg.m_min:
            duplicate = any(
                cosine(a.descriptor, newest.descriptor) >= 0.98 for a in self.drm
            )
            if not duplicate:
                self.drm.append(DrmEntry(newest.box, newest.descriptor, t))
                promoted = True
        self.promotion_log.append(
            {"t": t, "count": count, "promoted": promoted, "duplicate": duplicate}
        )
        self.spent_ns += time.perf_counter_ns() - start
        return promoted

    def best_anchor(self, b_ref: Box, phi_ref: Descriptor,
                    pi: float | Callable[[Box], float],
                    t: int) -> tuple[DrmEntry, float] | None:
        """Exhaustively score every anchor; return the best if above tau_acc.

        ``pi`` is the motion prior, either a constant or a per-anchor-box
        callable. Ties break toward the most recently promoted anchor. Returns
        None when DRM is empty or no score reaches the acceptance margin.
        """
        start = time.perf_counter_ns()
        pi_of = pi if callable(pi) else (lambda _box: pi)
        best: tuple[DrmEntry, float] | None = None
        for entry in self.drm:  # oldest to newest, so >= keeps the newest tie
            s = score_anchor(entry, b_ref, phi_ref, pi_of(entry.box), t, self.cfg)
            s_pen = penalized_score(s, entry.descriptor, self.bank, self.cfg)
            if best is None or s_pen >= best[1]:
                best = (entry, s_pen)
        self.spent_ns += time.perf_counter_ns() - start
        if best is None or best[1] < self.cfg.tau_acc:
            return None
        return best

    def add_negative(self, descriptor: Descriptor) -> None:
        start = time.perf_counter_ns()
        self.bank.add(descriptor)
        self.spent_ns += time.perf_counter_ns() - start

    def dump_state(self) -> dict:
        """JSON-ready snapshot with descriptor checksums, for tests/debugging."""

        def crc(d: Descriptor) -> str:
            return f"{zlib.crc32(d.tobytes()):08x}"

        return {
            "ram": [
                {"box": e.box.to_dict(), "t": e.timestamp, "desc_crc": crc(e.descriptor)}
                for e in self.ram
            ],
            "drm": [
                {"box": e.box.to_dict(), "t": e.promoted_at, "desc_crc": crc(e.descriptor)}
                for e in self.drm
            ],
            "negative": [{"desc_crc": crc(d)} for d in self.bank],
        }
