"""Compact appearance model: gray+HSV descriptors, cosine similarity, NCC search.

A descriptor is a length-512 float64 vector: a mean-removed 16x16 grayscale
thumbnail scaled to [0, 1] concatenated with a 16 hue x 16 saturation
histogram normalized to sum 1, the whole thing l2-normalized. No learned
features anywhere.

Removing the thumbnail mean matters more than it looks: without it the shared
brightness level carries nearly all of the vector's energy, and any two
patches of similar average luminance score cosine 0.85 or higher no matter
how different their texture. With the mean gone, the gray half compares
texture the way normalized correlation does, and the color histogram's share
of the energy stops being negligible.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from .geometry import Box
from .media import Frame, crop_patch, crop_rect, hsv_channels, resample, to_gray

# Descriptors are plain float64 arrays; alias for signatures.
Descriptor = np.ndarray

PATCH_SIDE = 16
HUE_BINS = 16
SAT_BINS = 16
DESCRIPTOR_LEN = PATCH_SIDE * PATCH_SIDE + HUE_BINS * SAT_BINS


def hsv_histogram(patch: np.ndarray) -> np.ndarray:
    """16x16 hue/saturation histogram of an RGB patch, normalized to sum 1.

    Hue bins are 22.5 degrees wide; saturation bins are 1/16 wide. The value
    channel is ignored.
    """
    h, s, _ = hsv_channels(patch)
    hue_bin = np.minimum((h / (360.0 / HUE_BINS)).astype(int), HUE_BINS - 1)
    sat_bin = np.minimum((s * SAT_BINS).astype(int), SAT_BINS - 1)
    flat = (hue_bin * SAT_BINS + sat_bin).ravel()
    hist = np.bincount(flat, minlength=HUE_BINS * SAT_BINS).astype(np.float64)
    return hist / hist.sum()


def compute_descriptor(frame: Frame, box: Box) -> Descriptor:
    """Appearance descriptor of the boxed patch.

    The gray half is the patch resampled to 16x16, scaled to [0, 1], and
    shifted to zero mean; the color half is the hue/saturation histogram over
    all patch pixels. Raises if the box misses the frame entirely.
    """
    patch = crop_patch(frame, box)
    gray = resample(to_gray(patch), PATCH_SIDE, PATCH_SIDE).ravel() / 255.0
    parts = np.concatenate([gray - gray.mean(), hsv_histogram(patch)])
    norm = np.linalg.norm(parts)
    return parts / norm if norm > 0 else parts


def cosine(a: Descriptor, b: Descriptor) -> float:
    """Cosine similarity; 0 if either vector is all-zero."""
    if a.shape != b.shape:
        raise ValueError(f"descriptor length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _window_sums(gray_f64: np.ndarray, th: int, tw: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-offset sums and sums of squares over all th x tw windows.

    Computed with int64 integral images so flat windows have exactly zero
    variance.
    """
    g = gray_f64.astype(np.int64)
    ii = np.zeros((g.shape[0] + 1, g.shape[1] + 1), dtype=np.int64)
    ii2 = np.zeros_like(ii)
    np.cumsum(np.cumsum(g, axis=0), axis=1, out=ii[1:, 1:])
    np.cumsum(np.cumsum(g * g, axis=0), axis=1, out=ii2[1:, 1:])

    def box_sum(tab):
        return (
            tab[th:, tw:]
            - tab[:-th, tw:]
            - tab[th:, :-tw]
            + tab[:-th, :-tw]
        )

    return box_sum(ii).astype(np.float64), box_sum(ii2).astype(np.float64)


def ncc_scores(region_gray: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Zero-mean NCC of the template at every integer offset inside the region.

    Output shape is (H-th+1, W-tw+1). Offsets where the window or the template
    has zero variance score 0.
    """
    th, tw = template.shape
    rh, rw = region_gray.shape
    if th > rh or tw > rw:
        raise ValueError(
            f"template {tw}x{th} larger than region {rw}x{rh}"
        )
    t = template.astype(np.float64)
    t0 = t - t.mean()
    t_ss = float(np.sum(t0 * t0))
    if t_ss == 0.0:
        return np.zeros((rh - th + 1, rw - tw + 1))
    # sum(w * t0) == sum((w - mean(w)) * t0) because t0 sums to zero;
    # the valid-mode correlation gives that sum at every offset
    num = fftconvolve(region_gray.astype(np.float64), t0[::-1, ::-1],
                      mode="valid")
    w_sum, w_ss = _window_sums(region_gray, th, tw)
    w_var = w_ss - w_sum * w_sum / (th * tw)
    flat = w_var <= 0.0
    denom = np.sqrt(np.where(flat, 1.0, w_var) * t_ss)
    scores = np.where(flat, 0.0, num / denom)
    return np.clip(scores, -1.0, 1.0)


def ncc_search(frame: Frame, template: np.ndarray, region: Box) -> tuple[Box, float]:
    """Exhaustive NCC template search over the gray region.

    Returns the best-matching box (template dims, frame coordinates) and the
    peak score in [-1, 1]. Ties break toward the first offset in row-major
    order.
    """
    rect = crop_rect(frame.dims, region)
    if rect is None:
        raise ValueError(f"search region {region} does not intersect the frame")
    x0, y0, x1, y1 = rect
    region_gray = frame.gray()[y0:y1, x0:x1]
    scores = ncc_scores(region_gray, template)
    peak = int(np.argmax(scores))
    oy, ox = divmod(peak, scores.shape[1])
    th, tw = template.shape
    best = Box(float(x0 + ox), float(y0 + oy), float(tw), float(th))
    return best, float(scores[oy, ox])
