"""Per-episode navigation metrics: NE, SR, OSR, SPL, TL and nDTW."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .. import kernels

DEFAULT_SUCCESS_RADIUS = 3.0


class MetricError(ValueError):
    pass


def _points(path: Sequence[Sequence[float]], name: str) -> np.ndarray:
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] < 2:
        raise MetricError(f"{name} must be a nonempty list of points")
    pts = np.ascontiguousarray(pts[:, :2])
    if not np.all(np.isfinite(pts)):
        raise MetricError(f"{name} contains non-finite coordinates")
    return pts


def navigation_error(final: Sequence[float], goal: Sequence[float]) -> float:
    return math.hypot(float(final[0]) - float(goal[0]), float(final[1]) - float(goal[1]))


def success(final: Sequence[float], goal: Sequence[float], radius: float = DEFAULT_SUCCESS_RADIUS) -> bool:
    """Stopped within ``radius`` of the goal; the boundary counts as success."""
    return navigation_error(final, goal) <= radius


def oracle_success(trajectory: Sequence[Sequence[float]], goal: Sequence[float], radius: float = DEFAULT_SUCCESS_RADIUS) -> bool:
    pts = _points(trajectory, "trajectory")
    d = np.hypot(pts[:, 0] - float(goal[0]), pts[:, 1] - float(goal[1]))
    return bool(np.any(d <= radius))


def trajectory_length(trajectory: Sequence[Sequence[float]]) -> float:
    pts = _points(trajectory, "trajectory")
    if len(pts) < 2:
        return 0.0
    seg = np.diff(pts, axis=0)
    return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))


def spl(succeeded: bool, shortest: float, actual: float) -> float:
    if not shortest > 0:
        raise MetricError(f"shortest path length must be positive, got {shortest}")
    if actual < 0:
        raise MetricError(f"actual path length must be non-negative, got {actual}")
    if not succeeded:
        return 0.0
    return shortest / max(shortest, actual)


def dtw(a: Sequence[Sequence[float]], b: Sequence[Sequence[float]]) -> float:
    return float(kernels.dtw_cost(_points(a, "trajectory"), _points(b, "reference")))


def ndtw(trajectory: Sequence[Sequence[float]], reference: Sequence[Sequence[float]], radius: float = DEFAULT_SUCCESS_RADIUS) -> float:
    if radius <= 0:
        raise MetricError("nDTW radius must be positive")
    ref = _points(reference, "reference")
    return math.exp(-dtw(trajectory, ref) / (len(ref) * radius))


def densify(path: Sequence[Sequence[float]], step: float) -> np.ndarray:
    """Resample a polyline so consecutive points are at most ``step`` apart.

    Original vertices are kept; each segment gets ``ceil(len / step)`` equal parts.
    """
    pts = _points(path, "path")
    if step <= 0:
        raise MetricError("densify step must be positive")
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(int(math.ceil(float(np.hypot(*(b - a))) / step - 1e-9)), 1)
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return np.array(out)


def dedupe(path: Sequence[Sequence[float]]) -> np.ndarray:
    """Drop points identical to their predecessor (in-place turns)."""
    pts = _points(path, "path")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]
