"""Normalized coordinate-grid overlay and small raster helpers.

Normalized coordinates run over [0, 1000] on both image axes and map onto
pixel-center coordinates: ``px = u / 1000 * (width - 1)``.
"""

from __future__ import annotations

import io
import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from PIL import Image

GRID_MAX = 1000
GRID_STEP = 100
GRID_COLOR = (0, 200, 255)
LABEL_COLOR = (255, 0, 255)

# 3x5 bitmap digits, rows top to bottom
_FONT = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}
GLYPH_W, GLYPH_H = 3, 5


def _round(x: float) -> int:
    return int(math.floor(x + 0.5))


def normalized_to_pixel(u: float, v: float, width: int, height: int) -> Tuple[float, float]:
    return u / GRID_MAX * (width - 1), v / GRID_MAX * (height - 1)


def pixel_to_normalized(px: float, py: float, width: int, height: int) -> Tuple[float, float]:
    return px / (width - 1) * GRID_MAX, py / (height - 1) * GRID_MAX


def grid_line_positions(width: int, height: int) -> Tuple[List[int], List[int]]:
    """Pixel columns and rows of the grid lines at every 100 normalized units."""
    ticks = range(0, GRID_MAX + 1, GRID_STEP)
    xs = [_round(t / GRID_MAX * (width - 1)) for t in ticks]
    ys = [_round(t / GRID_MAX * (height - 1)) for t in ticks]
    return xs, ys


def text_width(text: str) -> int:
    return len(text) * (GLYPH_W + 1) - 1


def draw_text(img: np.ndarray, x: int, y: int, text: str, color: Sequence[int]) -> None:
    """Stamp digits onto ``img`` in place; pixels falling outside are dropped."""
    h, w = img.shape[:2]
    for n, ch in enumerate(text):
        glyph = _FONT.get(ch)
        if glyph is None:
            continue
        gx = x + n * (GLYPH_W + 1)
        for r, row in enumerate(glyph):
            for c, bit in enumerate(row):
                if bit == "1":
                    px, py = gx + c, y + r
                    if 0 <= px < w and 0 <= py < h:
                        img[py, px] = color


def _label_stride(spacing: float, widest: int) -> int:
    for s in (1, 2, 5, 10):
        if s * spacing >= widest + 2:
            return s
    return 10


def annotate_grid(image: np.ndarray) -> np.ndarray:
    """Return a copy with grid lines every 100 normalized units and border tick labels."""
    img = np.array(image, dtype=np.uint8, copy=True)
    if img.ndim != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("annotate_grid expects a nonempty HxWx3 image")
    h, w = img.shape[:2]
    xs, ys = grid_line_positions(w, h)
    for x in xs:
        img[:, x] = GRID_COLOR
    for y in ys:
        img[y, :] = GRID_COLOR

    labels = [str(t) for t in range(0, GRID_MAX + 1, GRID_STEP)]
    widest = text_width(labels[-1])
    # a label that would touch the previous one is skipped
    stride_x = _label_stride((w - 1) / 10, widest)
    end = -2
    for k in range(0, len(xs), stride_x):
        tw = text_width(labels[k])
        x = min(xs[k] + 2, w - tw - 1) if k < len(xs) - 1 else xs[k] - tw - 1
        if x > end + 1:
            draw_text(img, x, 2, labels[k], LABEL_COLOR)
            end = x + tw
    stride_y = _label_stride((h - 1) / 10, GLYPH_H)
    end = 2 + GLYPH_H  # corner already labelled by the column ticks
    for k in range(stride_y, len(ys), stride_y):
        y = min(ys[k] + 2, h - GLYPH_H - 1) if k < len(ys) - 1 else ys[k] - GLYPH_H - 1
        if y > end + 1:
            draw_text(img, 2, y, labels[k], LABEL_COLOR)
            end = y + GLYPH_H
    return img


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), "RGB").save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def save_png(image: np.ndarray, path: Union[str, Path]) -> None:
    Path(path).write_bytes(encode_png(image))


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
