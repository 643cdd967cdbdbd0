"""Rigid-body poses, pinhole cameras and analytic ray intersection.

Conventions: world is z-up. The body frame sits on the floor under the agent
with x forward, y left, z up. Cameras are z-forward, x-right, y-down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

# camera (x right, y down, z forward) -> body (x forward, y left, z up)
_CAM_TO_BODY = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


class GeometryError(ValueError):
    pass


class InvalidDepthError(GeometryError):
    pass


class PixelBoundsError(GeometryError):
    pass


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(float(theta), TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


def angular_distance(a: float, b: float) -> float:
    """Unsigned angle between two headings, in [0, pi]."""
    return abs(math.remainder(a - b, TWO_PI))


def rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True, eq=False)
class Pose3:
    """Rigid transform mapping points from a child frame into a parent frame."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise GeometryError("pose contains non-finite values")
        if np.abs(r @ r.T - np.eye(3)).max() > 1e-6 or np.linalg.det(r) < 0:
            raise GeometryError("rotation is not a proper orthonormal matrix")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose3":
        return cls()

    @classmethod
    def from_yaw(cls, x: float, y: float, z: float, yaw: float) -> "Pose3":
        return cls(rot_z(yaw), np.array([x, y, z], dtype=float))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose3":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose3") -> "Pose3":
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        r = self.rotation @ other.rotation
        # re-orthonormalize so long chains stay valid
        u, _, vt = np.linalg.svd(r)
        r = u @ vt
        return Pose3(r, self.rotation @ other.translation + self.translation)

    __matmul__ = compose

    def inverse(self) -> "Pose3":
        rt = self.rotation.T
        return Pose3(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a 3-vector or an (N, 3) array of points."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    @property
    def yaw(self) -> float:
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def __repr__(self) -> str:
        t = ", ".join(f"{v:.4g}" for v in self.translation)
        return f"Pose3(t=({t}), yaw={math.degrees(self.yaw):.2f}deg)"


@dataclass(frozen=True)
class AgentState:
    """Planar agent state (x, y, heading)."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta)):
            raise GeometryError("agent state must be finite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def body_pose(self, floor_height: float = 0.0) -> Pose3:
        return Pose3.from_yaw(self.x, self.y, floor_height, self.theta)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 64.0
    fy: float = 64.0
    cx: float = 63.5
    cy: float = 47.5
    width: int = 128
    height: int = 96

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point outside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def contains(self, u: float, v: float) -> bool:
        return 0.0 <= u <= self.width - 1 and 0.0 <= v <= self.height - 1

    def project(self, point: np.ndarray) -> Tuple[float, float]:
        x, y, z = (float(c) for c in point)
        if z <= 0:
            raise InvalidDepthError("point is behind the camera")
        return self.fx * x / z + self.cx, self.fy * y / z + self.cy

    def pixel_rays(self) -> np.ndarray:
        """Unnormalized camera-frame directions (z = 1) for every pixel, shape (H, W, 3)."""
        u, v = np.meshgrid(np.arange(self.width, dtype=float), np.arange(self.height, dtype=float))
        d = np.empty((self.height, self.width, 3))
        d[..., 0] = (u - self.cx) / self.fx
        d[..., 1] = (v - self.cy) / self.fy
        d[..., 2] = 1.0
        return d


@dataclass(frozen=True)
class CameraRig:
    """Rotating camera on a mast: fixed height and pitch, discrete yaw offsets."""

    mount_height: float = 1.25
    pitch: float = 0.0
    n_yaws: int = 8

    def __post_init__(self) -> None:
        if self.n_yaws < 1:
            raise GeometryError("rig needs at least one yaw offset")

    @property
    def yaw_step(self) -> float:
        return TWO_PI / self.n_yaws

    @property
    def yaw_offsets(self) -> Tuple[float, ...]:
        """Rig yaws in [0, 2*pi), counter-clockwise from the body's forward axis."""
        return tuple(k * self.yaw_step for k in range(self.n_yaws))

    def extrinsic(self, camera_yaw: float) -> Pose3:
        """Camera-to-body transform for the rig rotated by ``camera_yaw``."""
        r = rot_z(camera_yaw) @ rot_y(self.pitch) @ _CAM_TO_BODY
        return Pose3(r, np.array([0.0, 0.0, self.mount_height]))


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        o = np.array(self.origin, dtype=float).reshape(3)
        d = np.array(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if not np.isfinite(n) or n == 0:
            raise GeometryError("ray direction must be nonzero")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d / n)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


def back_project(pixel: Sequence[float], depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Lift a pixel with metric depth (along the optical axis) to a camera-frame point."""
    u, v = float(pixel[0]), float(pixel[1])
    if not depth > 0:
        raise InvalidDepthError(f"depth must be positive, got {depth}")
    if not intrinsics.contains(u, v):
        raise PixelBoundsError(f"pixel ({u}, {v}) outside {intrinsics.width}x{intrinsics.height}")
    return np.array(
        [(u - intrinsics.cx) / intrinsics.fx * depth, (v - intrinsics.cy) / intrinsics.fy * depth, depth]
    )


def to_world(point_camera: np.ndarray, body_pose: Pose3, cam_extrinsic: Pose3) -> np.ndarray:
    return body_pose.apply(cam_extrinsic.apply(point_camera))


def ray_aabb_intersect(ray: Ray, box_min: Sequence[float], box_max: Sequence[float]) -> Optional[float]:
    """Smallest t >= 0 at which the ray touches the box surface, or None.

    A ray starting inside the box reports its exit distance.
    """
    lo = np.asarray(box_min, dtype=float)
    hi = np.asarray(box_max, dtype=float)
    if np.any(lo > hi):
        raise GeometryError("box min must not exceed max")
    t_near, t_far = -math.inf, math.inf
    for k in range(3):
        o, d = float(ray.origin[k]), float(ray.direction[k])
        if d == 0.0:
            if o < lo[k] or o > hi[k]:
                return None
            continue
        t1, t2 = (lo[k] - o) / d, (hi[k] - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
    if t_near > t_far or t_far < 0:
        return None
    return t_near if t_near >= 0 else t_far
