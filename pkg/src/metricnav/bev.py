"""Top-down (bird's-eye) rendering of the fused volume with grid and path overlays."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from .geometry import AgentState
from .imaging import GRID_MAX, annotate_grid
from .tsdf import TsdfVolume

UNKNOWN, FREE, OCCUPIED = 0, 1, 2

CLASS_COLORS = {
    UNKNOWN: (128, 128, 128),
    FREE: (255, 255, 255),
    OCCUPIED: (0, 0, 0),
}
TRAIL_COLOR = (255, 220, 0)
WAYPOINT_COLOR = (0, 60, 255)
AGENT_COLOR = (230, 0, 0)

DEFAULT_SIZE = 401
SLAB_LOW = 0.1
SLAB_HIGH = 1.5
PADDING = 1.0


class BevBoundsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BevImage:
    """Rendered map plus the affine transform between pixels and world meters.

    ``world_origin`` is the world (x, y) of the center of pixel (0, 0), the
    top-left corner. Columns grow with +x, rows grow with -y.
    """

    pixels: np.ndarray  # (N, N, 3) uint8
    classes: np.ndarray  # (N, N) uint8
    meters_per_pixel: float
    world_origin: np.ndarray
    agent: AgentState
    floor_height: float = 0.0
    grid_cells: int = GRID_MAX

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    @property
    def extent(self) -> float:
        """Side length in meters between the first and last pixel centers."""
        return (self.size - 1) * self.meters_per_pixel

    @property
    def center(self) -> np.ndarray:
        half = self.extent / 2
        return self.world_origin + np.array([half, -half])

    def pixel_to_world(self, col: float, row: float) -> np.ndarray:
        return self.world_origin + np.array([col, -row]) * self.meters_per_pixel

    def world_to_pixel(self, x: float, y: float) -> Tuple[int, int]:
        col = (x - self.world_origin[0]) / self.meters_per_pixel
        row = (self.world_origin[1] - y) / self.meters_per_pixel
        return int(math.floor(col + 0.5)), int(math.floor(row + 0.5))

    def world_to_normalized(self, x: float, y: float) -> Tuple[float, float]:
        u = (x - self.world_origin[0]) / self.extent * self.grid_cells
        v = (self.world_origin[1] - y) / self.extent * self.grid_cells
        return u, v


def bev_pixel_to_world(bev: BevImage, normalized: Sequence[float]) -> np.ndarray:
    """Map normalized grid coordinates in [0, 1000]^2 to world (x, y)."""
    u, v = float(normalized[0]), float(normalized[1])
    if not (0 <= u <= bev.grid_cells and 0 <= v <= bev.grid_cells):
        raise BevBoundsError(f"normalized coordinate ({u}, {v}) outside [0, {bev.grid_cells}]")
    scale = bev.extent / bev.grid_cells
    return bev.world_origin + np.array([u * scale, -v * scale])


def classify_columns(volume: TsdfVolume, floor_height: float) -> np.ndarray:
    """Per-(i, j) class of the obstacle slab above the floor."""
    zs = volume.voxel_centers(2)
    slab = (zs >= floor_height + SLAB_LOW) & (zs <= floor_height + SLAB_HIGH)
    with volume._lock:
        w = volume.weight[:, :, slab]
        s = volume.sdf[:, :, slab]
    seen = w > 0
    occupied = np.any(seen & (s < 0), axis=2)
    observed = np.any(seen, axis=2)
    classes = np.full(observed.shape, UNKNOWN, dtype=np.uint8)
    classes[observed] = FREE
    classes[occupied] = OCCUPIED
    return classes


def default_window(volume: TsdfVolume) -> Tuple[np.ndarray, float]:
    """Square window (center, side) around the observed footprint, padded by 1 m."""
    bounds = volume.observed_bounds()
    if bounds is None:
        lo, hi = volume.origin[:2], volume.upper[:2]
        pad = 0.0
    else:
        lo, hi = bounds
        pad = PADDING
    center = (lo + hi) / 2
    side = float(max(hi - lo)) + 2 * pad
    return center, side


def render_bev(
    volume: TsdfVolume,
    agent: AgentState,
    trail: Sequence[Sequence[float]] = (),
    waypoints: Sequence[Sequence[float]] = (),
    floor_height: float = 0.0,
    size: int = DEFAULT_SIZE,
    window: Optional[Tuple[Sequence[float], float]] = None,
) -> BevImage:
    """Orthographic top-down map: occupied / free / unknown plus overlays.

    Overlay order is grid, trail (yellow), waypoints (blue), agent arrow (red).
    """
    center, side = default_window(volume) if window is None else (np.asarray(window[0], float), float(window[1]))
    mpp = side / (size - 1)
    origin = np.array([center[0] - side / 2, center[1] + side / 2])

    cols = np.arange(size)
    xs = origin[0] + cols * mpp
    ys = origin[1] - cols * mpp
    ci = np.floor((xs - volume.origin[0]) / volume.voxel_size).astype(int)
    cj = np.floor((ys - volume.origin[1]) / volume.voxel_size).astype(int)
    col_classes = classify_columns(volume, floor_height)
    valid_i = (ci >= 0) & (ci < volume.dims[0])
    valid_j = (cj >= 0) & (cj < volume.dims[1])
    classes = np.full((size, size), UNKNOWN, dtype=np.uint8)
    rows_ok = np.flatnonzero(valid_j)
    cols_ok = np.flatnonzero(valid_i)
    if rows_ok.size and cols_ok.size:
        classes[np.ix_(rows_ok, cols_ok)] = col_classes[np.ix_(ci[cols_ok], cj[rows_ok])].T

    pixels = np.empty((size, size, 3), dtype=np.uint8)
    for cls, color in CLASS_COLORS.items():
        pixels[classes == cls] = color
    pixels = annotate_grid(pixels)

    bev = BevImage(pixels, classes, mpp, origin, agent, floor_height)
    im = Image.fromarray(pixels, "RGB")
    draw = ImageDraw.Draw(im)
    if len(trail) >= 2:
        pts = [bev.world_to_pixel(p[0], p[1]) for p in trail]
        draw.line(pts, fill=TRAIL_COLOR, width=2)
    for wp in waypoints:
        c, r = bev.world_to_pixel(wp[0], wp[1])
        draw.ellipse([c - 3, r - 3, c + 3, r + 3], fill=WAYPOINT_COLOR)
    _draw_arrow(draw, bev, agent)
    return BevImage(np.asarray(im, dtype=np.uint8).copy(), classes, mpp, origin, agent, floor_height)


def _draw_arrow(draw: ImageDraw.ImageDraw, bev: BevImage, agent: AgentState, length: int = 14) -> None:
    c, r = bev.world_to_pixel(agent.x, agent.y)
    dx, dy = math.cos(agent.theta), -math.sin(agent.theta)
    tip = (c + length * dx, r + length * dy)
    draw.line([(c, r), (int(round(tip[0] - 4 * dx)), int(round(tip[1] - 4 * dy)))], fill=AGENT_COLOR, width=3)
    px, py = -dy, dx
    head = [
        (round(tip[0]), round(tip[1])),
        (round(tip[0] - 7 * dx + 4 * px), round(tip[1] - 7 * dy + 4 * py)),
        (round(tip[0] - 7 * dx - 4 * px), round(tip[1] - 7 * dy - 4 * py)),
    ]
    draw.polygon(head, fill=AGENT_COLOR)
    draw.point((c, r), fill=AGENT_COLOR)
