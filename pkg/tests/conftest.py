"""Shared fixtures: tiny deterministic scenes and scenario specs.

All randomness is seeded; nothing here depends on wall clock or filesystem
state outside pytest's tmp_path machinery.
"""

from __future__ import annotations

import numpy as np
import pytest

from damtrack.geometry import Box, FrameDims
from damtrack.media import Frame
from damtrack.synth import (NoiseSpec, ObjectSpec, OcclusionSpec,
                            ScenarioSpec, hash_uniform_array)


def make_block_patch(w: int, h: int, seed: int, block: int = 4,
                     lo: int = 40, hi: int = 220) -> np.ndarray:
    """Binary block-textured RGB patch; deterministic per seed."""
    nbx = -(-w // block)
    nby = -(-h // block)
    bits = hash_uniform_array(seed, (7, 7), nbx * nby) < 0.5
    mask = np.repeat(np.repeat(bits.reshape(nby, nbx), block, axis=0),
                     block, axis=1)[:h, :w]
    patch = np.where(mask[:, :, None], np.uint8(hi), np.uint8(lo))
    return np.ascontiguousarray(np.broadcast_to(patch, (h, w, 3)))


def make_scene(width: int, height: int, boxes: list[tuple[Box, int]],
               background: int = 100, index: int = 0) -> Frame:
    """Flat background with block-textured rectangles pasted at the boxes."""
    canvas = np.full((height, width, 3), background, dtype=np.uint8)
    for box, seed in boxes:
        x, y = int(box.x), int(box.y)
        w, h = int(box.w), int(box.h)
        canvas[y:y + h, x:x + w] = make_block_patch(w, h, seed)
    return Frame(canvas, index=index)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xDA47)


def tiny_scenario(name: str = "tiny", seed: int = 421, length: int = 30,
                  occ_start: int = 12, occ_len: int = 5,
                  with_distractor: bool = False,
                  noise: NoiseSpec | None = None) -> ScenarioSpec:
    """Small fast scenario: 240x180 frame, slow diagonal target, one cover."""
    target = ObjectSpec(
        color=(170, 120, 60),
        size=(24, 24),
        waypoints=((0, 40.0, 60.0), (length - 1, 40.0 + 2.0 * (length - 1), 90.0)),
    )
    distractors = ()
    if with_distractor:
        distractors = (ObjectSpec(
            color=(80, 150, 170),
            size=(24, 24),
            pattern_similarity=0.7,
            waypoints=((0, 170.0, 140.0), (length - 1, 75.0, 140.0)),
        ),)
    occlusions = ()
    if occ_len > 0:
        occlusions = (OcclusionSpec(occ_start, occ_len),)
    return ScenarioSpec(
        name=name,
        seed=seed,
        target=target,
        length=length,
        dims=FrameDims(240, 180),
        distractors=distractors,
        occlusions=occlusions,
        noise=noise or NoiseSpec(),
    )
