"""Turn a (view, u, v) selection into a metric floor waypoint."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..bev import SLAB_HIGH, BevImage, bev_pixel_to_world
from ..geometry import AgentState, CameraIntrinsics, CameraRig, Ray
from ..imaging import normalized_to_pixel
from ..sim.render import MAX_DEPTH
from ..sim.scene import DEFAULT_AGENT_RADIUS
from ..tsdf import RgbdFrame, TsdfVolume, raycast_surface
from .actions import WAYPOINT, SpatialAction
from .views import VIEW_IDS


class GroundingError(ValueError):
    """The selection points into unobserved space or cannot be lifted to 3D."""


@dataclass(frozen=True)
class GroundingConfig:
    d_max: float = 3.0
    agent_radius: float = DEFAULT_AGENT_RADIUS
    standoff_factor: float = 1.5
    max_range: float = MAX_DEPTH

    @property
    def standoff(self) -> float:
        return self.standoff_factor * self.agent_radius


@dataclass(frozen=True, eq=False)
class GroundedWaypoint:
    """``target`` is where the controller drives. ``surface_point`` is the floor
    projection of the selected location before the clearance pull-back, and
    ``hit`` the raw 3D surface point for ego selections."""

    target: np.ndarray
    surface_point: np.ndarray
    hit: Optional[np.ndarray]
    standoff: float
    clamped: bool
    view: str

    @property
    def xy(self) -> np.ndarray:
        return self.target[:2]


def ego_ray(frame: RgbdFrame, u: float, v: float, intrinsics: CameraIntrinsics, rig: CameraRig) -> Ray:
    """World ray through the normalized grid point (u, v) of an ego frame."""
    px, py = normalized_to_pixel(u, v, intrinsics.width, intrinsics.height)
    d_cam = np.array([(px - intrinsics.cx) / intrinsics.fx, (py - intrinsics.cy) / intrinsics.fy, 1.0])
    pose = frame.camera_pose(rig)
    return Ray(pose.translation, pose.rotate(d_cam))


def clamp_to_horizon(agent: AgentState, xy: np.ndarray, d_max: float):
    off = xy - agent.xy
    dist = float(np.hypot(off[0], off[1]))
    if dist <= d_max:
        return xy, False
    return agent.xy + off * (d_max / dist), True


def ground_action(
    action: SpatialAction,
    views: Sequence[RgbdFrame],
    bev: BevImage,
    volume: TsdfVolume,
    intrinsics: CameraIntrinsics,
    rig: CameraRig,
    agent: AgentState,
    floor_height: float = 0.0,
    config: GroundingConfig = GroundingConfig(),
) -> GroundedWaypoint:
    """Lift a waypoint action to a floor target within ``d_max`` of the agent.

    Ego selections are raycast into the fused volume from the capturing
    camera; the hit is dropped to the floor and pulled back toward the camera
    by ``1.5 * agent_radius`` along the ray's horizontal direction. BEV
    selections map straight to the floor. The final target must sit in an
    observed column.
    """
    if action.kind != WAYPOINT:
        raise GroundingError("only waypoint actions can be grounded")
    hit = None
    if action.view == "bev":
        xy = bev_pixel_to_world(bev, (action.u, action.v))
        surface = np.array([xy[0], xy[1], floor_height])
        standoff = 0.0
        target_xy = xy
    else:
        idx = VIEW_IDS.index(action.view)
        if len(views) != len(VIEW_IDS):
            raise GroundingError(f"expected {len(VIEW_IDS)} ego frames, got {len(views)}")
        ray = ego_ray(views[idx], action.u, action.v, intrinsics, rig)
        hit = raycast_surface(volume, ray, config.max_range)
        if hit is None:
            raise GroundingError(f"{action.describe()} points into unknown space")
        surface = np.array([hit[0], hit[1], floor_height])
        horiz = ray.direction[:2]
        n = math.hypot(horiz[0], horiz[1])
        if n < 1e-9:
            raise GroundingError(f"{action.describe()} looks straight up or down")
        standoff = config.standoff
        target_xy = surface[:2] - horiz / n * standoff

    target_xy, clamped = clamp_to_horizon(agent, np.asarray(target_xy, dtype=float), config.d_max)
    if not volume.column_observed(target_xy[0], target_xy[1], floor_height, floor_height + SLAB_HIGH):
        raise GroundingError(f"{action.describe()} resolves to unobserved space")
    target = np.array([target_xy[0], target_xy[1], floor_height])
    return GroundedWaypoint(target, surface, hit, standoff, clamped, action.view)
