"""Truncated signed distance fusion of RGB-D frames into a dense voxel grid."""

from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .geometry import AgentState, CameraIntrinsics, CameraRig, Pose3, Ray, normalize_angle

SNAPSHOT_MAGIC = b"MNTS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sI3I5d")

DEFAULT_VOXEL_SIZE = 0.05
DEFAULT_W_MAX = 100.0


class TsdfError(ValueError):
    pass


class FrameShapeError(TsdfError):
    pass


class VolumeBoundsError(TsdfError):
    pass


@dataclass(frozen=True, eq=False)
class RgbdFrame:
    """One RGB-D capture from the rotating camera."""

    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) meters, 0 = invalid
    timestamp: float
    camera_yaw: float  # rig rotation relative to the body
    body_pose: Pose3
    agent_state: AgentState

    def __post_init__(self) -> None:
        if self.color.ndim != 3 or self.color.shape[2] != 3 or self.color.shape[:2] != self.depth.shape:
            raise FrameShapeError(f"color {self.color.shape} and depth {self.depth.shape} disagree")

    @property
    def heading(self) -> float:
        """Absolute optical-axis heading in the world."""
        return normalize_angle(self.agent_state.theta + self.camera_yaw)

    @property
    def position(self) -> np.ndarray:
        return self.agent_state.xy

    def camera_pose(self, rig: CameraRig) -> Pose3:
        """World-from-camera transform at capture time."""
        return self.body_pose @ rig.extrinsic(self.camera_yaw)


class TsdfVolume:
    """Dense voxel grid with signed distance S and weight W per voxel.

    Voxel (i, j, k) has its center at ``origin + (i + 0.5, j + 0.5, k + 0.5) * voxel_size``.
    """

    def __init__(
        self,
        origin: Sequence[float],
        voxel_size: float = DEFAULT_VOXEL_SIZE,
        dims: Sequence[int] = (80, 80, 44),
        truncation: Optional[float] = None,
        w_max: float = DEFAULT_W_MAX,
    ) -> None:
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or min(dims) < 2:
            raise TsdfError("volume needs at least 2 voxels per axis")
        if voxel_size <= 0:
            raise TsdfError("voxel_size must be positive")
        self.origin = np.asarray(origin, dtype=float).reshape(3)
        self.voxel_size = float(voxel_size)
        self.dims = dims
        self.truncation = float(truncation) if truncation is not None else 4.0 * self.voxel_size
        self.w_max = float(w_max)
        self.sdf = np.full(dims, self.truncation)
        self.weight = np.zeros(dims)
        self._lock = threading.RLock()

    @classmethod
    def from_bounds(
        cls,
        lo: Sequence[float],
        hi: Sequence[float],
        voxel_size: float = DEFAULT_VOXEL_SIZE,
        **kwargs,
    ) -> "TsdfVolume":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        dims = np.maximum(np.ceil((hi - lo) / voxel_size - 1e-9).astype(int), 2)
        return cls(lo, voxel_size, dims, **kwargs)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + np.asarray(self.dims) * self.voxel_size

    def contains(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.origin) and np.all(p <= self.upper))

    def voxel_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.voxel_size

    def copy(self) -> "TsdfVolume":
        other = TsdfVolume(self.origin, self.voxel_size, self.dims, self.truncation, self.w_max)
        with self._lock:
            other.sdf = self.sdf.copy()
            other.weight = self.weight.copy()
        return other

    def is_empty(self) -> bool:
        return not np.any(self.weight > 0)

    def observed_bounds(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Axis-aligned (lo, hi) of observed voxels in x/y, or None."""
        cols = np.any(self.weight > 0, axis=2)
        if not cols.any():
            return None
        ii, jj = np.nonzero(cols)
        lo = self.origin[:2] + np.array([ii.min(), jj.min()]) * self.voxel_size
        hi = self.origin[:2] + (np.array([ii.max(), jj.max()]) + 1) * self.voxel_size
        return lo, hi

    def column_observed(self, x: float, y: float, z0: float, z1: float) -> bool:
        """True when any voxel of the (x, y) column between heights z0 and z1 has W > 0."""
        i = int(math.floor((x - self.origin[0]) / self.voxel_size))
        j = int(math.floor((y - self.origin[1]) / self.voxel_size))
        if not (0 <= i < self.dims[0] and 0 <= j < self.dims[1]):
            return False
        zs = self.voxel_centers(2)
        sel = (zs >= z0) & (zs <= z1)
        with self._lock:
            return bool(np.any(self.weight[i, j, sel] > 0))


def tsdf_update(s_prev, w_prev, sdf_obs, w_obs, w_max: float = math.inf):
    """Weighted running average of one observation; returns (S, W)."""
    s = (w_prev * s_prev + w_obs * sdf_obs) / (w_prev + w_obs)
    return s, np.minimum(w_prev + w_obs, w_max)


def integrate_frame(
    volume: TsdfVolume,
    frame: RgbdFrame,
    intrinsics: CameraIntrinsics,
    rig: CameraRig,
    weight: float = 1.0,
) -> TsdfVolume:
    """Fuse one RGB-D frame into the volume (in place) and return it."""
    if frame.depth.shape != (intrinsics.height, intrinsics.width):
        raise FrameShapeError(
            f"depth {frame.depth.shape} does not match intrinsics {intrinsics.height}x{intrinsics.width}"
        )
    if weight <= 0:
        raise TsdfError("observation weight must be positive")
    cam_from_world = frame.camera_pose(rig).inverse().as_matrix()
    depth = np.ascontiguousarray(frame.depth, dtype=float)
    with volume._lock:
        kernels.integrate_tsdf(
            volume.sdf,
            volume.weight,
            volume.origin,
            volume.voxel_size,
            volume.truncation,
            volume.w_max,
            cam_from_world,
            float(intrinsics.fx),
            float(intrinsics.fy),
            float(intrinsics.cx),
            float(intrinsics.cy),
            depth,
            float(weight),
        )
    return volume


def query_sdf(volume: TsdfVolume, point: Sequence[float]) -> Tuple[float, float]:
    """Trilinear (S, W) at a point; W = 0 means unknown."""
    p = np.asarray(point, dtype=float).reshape(1, 3)
    if not volume.contains(p[0]):
        raise VolumeBoundsError(f"point {p[0].tolist()} outside volume")
    with volume._lock:
        s, w, _ = kernels.sample_tsdf(volume.sdf, volume.weight, volume.origin, volume.voxel_size, p)
    return float(s[0]), float(w[0])


def raycast_many(
    volume: TsdfVolume,
    origins: np.ndarray,
    directions: np.ndarray,
    max_range: float,
    step: Optional[float] = None,
) -> np.ndarray:
    """Batch raycast; rows of NaN where a ray finds no surface."""
    step = volume.voxel_size / 2 if step is None else min(step, volume.voxel_size / 2)
    o = np.ascontiguousarray(np.asarray(origins, dtype=float).reshape(-1, 3))
    d = np.asarray(directions, dtype=float).reshape(-1, 3)
    d = np.ascontiguousarray(d / np.linalg.norm(d, axis=1, keepdims=True))
    with volume._lock:
        return kernels.raycast_tsdf(
            volume.sdf, volume.weight, volume.origin, volume.voxel_size, o, d, float(max_range), float(step)
        )


def raycast_surface(volume: TsdfVolume, ray: Ray, max_range: float, step: Optional[float] = None) -> Optional[np.ndarray]:
    """First front-facing zero crossing along the ray, or None.

    Samples whose eight surrounding voxels are not all observed never bracket
    a crossing, so unknown space cannot produce a hit.
    """
    hit = raycast_many(volume, ray.origin, ray.direction, max_range, step)[0]
    if np.isnan(hit[0]):
        return None
    return hit


def save_snapshot(volume: TsdfVolume, path: Union[str, Path]) -> None:
    """Write the little-endian snapshot: header, then S and W as float32 in C order."""
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        *volume.dims,
        volume.voxel_size,
        *volume.origin,
        volume.truncation,
    )
    with volume._lock:
        payload = volume.sdf.astype("<f4").tobytes() + volume.weight.astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_snapshot(path: Union[str, Path]) -> TsdfVolume:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TsdfError("snapshot truncated")
    magic, version, nx, ny, nz, vs, ox, oy, oz, trunc = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise TsdfError(f"bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise TsdfError(f"unsupported snapshot version {version}")
    n = nx * ny * nz
    if len(data) != _HEADER.size + 8 * n:
        raise TsdfError("snapshot payload size mismatch")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    vol = TsdfVolume((ox, oy, oz), vs, (nx, ny, nz), trunc)
    vol.sdf = arr[:n].reshape(nx, ny, nz).astype(float)
    vol.weight = arr[n:].reshape(nx, ny, nz).astype(float)
    return vol
