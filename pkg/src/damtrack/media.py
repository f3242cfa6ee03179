"""Frame representation, PPM/PGM sequence I/O, patch extraction, color conversions.

Patches are plain numpy arrays: RGB patches are ``(h, w, 3) uint8``, grayscale
patches ``(h, w) uint8``. Only binary PPM (P6) and PGM (P5) are decoded
natively; PNG support is optional and needs Pillow.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .geometry import Box, FrameDims


class MediaError(Exception):
    """Unreadable file, malformed header, or inconsistent sequence."""


@dataclass
class Frame:
    """One RGB video frame plus its position in the sequence."""

    pixels: np.ndarray  # (H, W, 3) uint8
    index: int = 0
    _gray: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"frame pixels must be (H, W, 3), got {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {self.pixels.dtype}")

    @property
    def dims(self) -> FrameDims:
        h, w = self.pixels.shape[:2]
        return FrameDims(w, h)

    def gray(self) -> np.ndarray:
        """Full-frame grayscale view, computed once per frame."""
        if self._gray is None:
            self._gray = to_gray(self.pixels)
        return self._gray


# --- pixel math ---------------------------------------------------------------

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


def to_gray(patch: np.ndarray) -> np.ndarray:
    """Convert an RGB patch to 8-bit grayscale (BT.601 luma, round-half-up)."""
    luma = patch.astype(np.float64) @ _LUMA
    return np.floor(luma + 0.5).astype(np.uint8)


def to_hsv(pixel) -> tuple[float, float, float]:
    """Hexcone HSV of one 8-bit RGB pixel: h in [0, 360), s and v in [0, 1].

    Hue is defined as 0 for achromatic pixels (s = 0).
    """
    r, g, b = (int(c) for c in pixel)
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx / 255.0
    s = 0.0 if mx == 0 else delta / mx
    if delta == 0:
        h = 0.0
    elif mx == r:
        h = (60.0 * ((g - b) / delta)) % 360.0
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    return h, s, v


def hsv_channels(patch: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized hexcone conversion of an RGB patch; same conventions as to_hsv."""
    rgb = patch.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta == 0, 1.0, delta)
    h = np.where(
        mx == r,
        ((g - b) / safe) % 6.0,
        np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    h = np.where(delta == 0, 0.0, 60.0 * h)
    s = np.where(mx == 0, 0.0, delta / np.where(mx == 0, 1.0, mx))
    v = mx / 255.0
    return h, s, v


def crop_patch(frame: Frame, box: Box) -> np.ndarray:
    """Pixels of the box/frame intersection, box rounded outward to the pixel grid."""
    rect = crop_rect(frame.dims, box)
    if rect is None:
        raise ValueError(f"box {box} does not intersect the frame")
    x0, y0, x1, y1 = rect
    return frame.pixels[y0:y1, x0:x1]


def crop_rect(dims: FrameDims, box: Box) -> tuple[int, int, int, int] | None:
    """Integer crop rectangle (x0, y0, x1, y1) covering the box, or None if disjoint."""
    x0 = max(int(math.floor(box.x)), 0)
    y0 = max(int(math.floor(box.y)), 0)
    x1 = min(int(math.ceil(box.x2)), dims.width)
    y1 = min(int(math.ceil(box.y2)), dims.height)
    if x1 <= x0 or y1 <= y0:
        return None
    return x0, y0, x1, y1


def resample(gray: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resampling of a grayscale patch to ``out_w`` x ``out_h``.

    Uses pixel-center alignment, so identity dims reproduce the input exactly.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dims must be >= 1")
    in_h, in_w = gray.shape
    if (in_w, in_h) == (out_w, out_h):
        return gray.copy()
    src = gray.astype(np.float64)
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1 - fy[:, None]) + bot * fy[:, None]
    return np.floor(out + 0.5).astype(np.uint8)


# --- PPM / PGM codec ----------------------------------------------------------


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments between header fields
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise MediaError("truncated header")
    return data[start:pos], pos


def read_pnm(path: str) -> np.ndarray:
    """Decode a binary PPM (P6) or PGM (P5) file.

    Returns (H, W, 3) for PPM and (H, W) for PGM, both uint8, maxval 255 only.
    """
    with open(path, "rb") as f:
        data = f.read()
    try:
        magic, pos = _read_header_token(data, 0)
        if magic not in (b"P5", b"P6"):
            raise MediaError(f"unsupported magic {magic!r}")
        w_tok, pos = _read_header_token(data, pos)
        h_tok, pos = _read_header_token(data, pos)
        max_tok, pos = _read_header_token(data, pos)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
        if width < 1 or height < 1:
            raise MediaError("non-positive dimensions")
        if maxval != 255:
            raise MediaError(f"unsupported maxval {maxval}")
        pos += 1  # single whitespace byte after maxval
        channels = 3 if magic == b"P6" else 1
        need = width * height * channels
        raw = data[pos : pos + need]
        if len(raw) != need:
            raise MediaError(f"expected {need} pixel bytes, found {len(raw)}")
    except MediaError as e:
        raise MediaError(f"{path}: {e}") from None
    except ValueError as e:
        raise MediaError(f"{path}: bad header field ({e})") from None
    arr = np.frombuffer(raw, dtype=np.uint8)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return arr.reshape(height, width).copy()


def write_pnm(path: str, pixels: np.ndarray) -> None:
    """Encode uint8 pixels as binary PPM (3-channel) or PGM (single-channel)."""
    if pixels.dtype != np.uint8:
        raise ValueError("pixels must be uint8")
    if pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = b"P6"
        h, w = pixels.shape[:2]
    elif pixels.ndim == 2:
        magic = b"P5"
        h, w = pixels.shape
    else:
        raise ValueError(f"unsupported pixel shape {pixels.shape}")
    with open(path, "wb") as f:
        f.write(magic + b"\n" + f"{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def _read_png(path: str) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise MediaError(f"{path}: PNG support requires Pillow (install damtrack[png])")
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


# --- sequence I/O -------------------------------------------------------------

_SEQUENCE_EXTENSIONS = (".ppm", ".pgm", ".png")


def load_sequence(path: str, allow_png: bool = True) -> Iterator[Frame]:
    """Yield frames from an image directory in lexicographic filename order.

    All frames must share dimensions; grayscale inputs are expanded to RGB.
    Failures are fatal and name the offending file.
    """
    if not os.path.isdir(path):
        raise MediaError(f"not a directory: {path}")
    names = sorted(
        n for n in os.listdir(path) if n.lower().endswith(_SEQUENCE_EXTENSIONS)
    )
    if not names:
        raise MediaError(f"no frames in {path}")
    dims = None
    for index, name in enumerate(names):
        full = os.path.join(path, name)
        if name.lower().endswith(".png"):
            if not allow_png:
                raise MediaError(f"{full}: PNG input disabled")
            pixels = _read_png(full)
        else:
            pixels = read_pnm(full)
        if pixels.ndim == 2:
            pixels = np.repeat(pixels[:, :, None], 3, axis=2)
        if dims is None:
            dims = pixels.shape[:2]
        elif pixels.shape[:2] != dims:
            raise MediaError(
                f"{full}: dims {pixels.shape[1]}x{pixels.shape[0]} do not match "
                f"sequence dims {dims[1]}x{dims[0]}"
            )
        yield Frame(pixels=pixels, index=index)


# --- annotation ---------------------------------------------------------------

_PALETTE = [
    (0, 220, 0),
    (255, 80, 0),
    (40, 120, 255),
    (255, 220, 0),
    (230, 0, 230),
    (0, 230, 230),
]


def label_color(label: str, order: list[str]) -> tuple[int, int, int]:
    """Stable per-label color: palette indexed by first-seen label order."""
    if label not in order:
        order.append(label)
    return _PALETTE[order.index(label) % len(_PALETTE)]


def draw_box_outline(pixels: np.ndarray, box: Box, color: tuple[int, int, int], thickness: int = 2) -> None:
    """Draw a box outline in place, clipped to the frame."""
    h, w = pixels.shape[:2]
    x0 = int(round(box.x))
    y0 = int(round(box.y))
    x1 = int(round(box.x2))
    y1 = int(round(box.y2))
    col = np.array(color, dtype=np.uint8)
    for t in range(thickness):
        xa, ya, xb, yb = x0 + t, y0 + t, x1 - t, y1 - t
        if xb <= xa or yb <= ya:
            break
        ys = slice(max(ya, 0), min(yb, h))
        xs = slice(max(xa, 0), min(xb, w))
        if 0 <= ya < h:
            pixels[ya, xs] = col
        if 0 <= yb - 1 < h:
            pixels[yb - 1, xs] = col
        if 0 <= xa < w:
            pixels[ys, xa] = col
        if 0 <= xb - 1 < w:
            pixels[ys, xb - 1] = col


def write_annotated(frame: Frame, boxes: list[tuple[str, Box]], path: str) -> None:
    """Write the frame as PPM with 2-px labeled box outlines drawn on a copy."""
    canvas = frame.pixels.copy()
    order: list[str] = []
    for label, box in boxes:
        draw_box_outline(canvas, box, label_color(label, order))
    write_pnm(path, canvas)
