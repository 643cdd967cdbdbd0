"""RGB-D rendering of box scenes by analytic ray casting."""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .. import kernels
from ..geometry import AgentState, CameraIntrinsics, CameraRig, Pose3
from ..tsdf import RgbdFrame
from .scene import SceneSpec

MAX_DEPTH = 10.0
MIN_DEPTH = 0.1
SCAN_INTERVAL = 0.05


def render_rgbd(
    scene: SceneSpec,
    body_pose: Pose3,
    camera_yaw: float,
    intrinsics: CameraIntrinsics,
    rig: CameraRig,
    timestamp: float = 0.0,
    agent_state: Optional[AgentState] = None,
    max_depth: float = MAX_DEPTH,
    min_depth: float = MIN_DEPTH,
) -> RgbdFrame:
    """Render one frame. Depth is measured along the optical axis; misses and
    returns beyond ``max_depth`` get depth 0 and black color."""
    cam = body_pose @ rig.extrinsic(camera_yaw)
    rays = intrinsics.pixel_rays().reshape(-1, 3)
    norms = np.linalg.norm(rays, axis=1)
    dirs = np.ascontiguousarray(cam.rotate(rays / norms[:, None]))
    t, idx = kernels.ray_boxes_nearest(
        np.ascontiguousarray(cam.translation),
        dirs,
        np.ascontiguousarray(scene.box_min),
        np.ascontiguousarray(scene.box_max),
        float(scene.floor_height),
    )
    depth = np.where(np.isfinite(t), t / norms, 0.0)
    valid = (depth >= min_depth) & (depth <= max_depth) & (idx >= 0)
    depth = np.where(valid, depth, 0.0)

    palette = np.array([b.color for b in scene.boxes] + [scene.floor_color], dtype=np.uint8).reshape(-1, 3)
    color = np.zeros((len(dirs), 3), dtype=np.uint8)
    color[valid] = palette[idx[valid]]

    h, w = intrinsics.height, intrinsics.width
    if agent_state is None:
        agent_state = AgentState(body_pose.translation[0], body_pose.translation[1], body_pose.yaw)
    return RgbdFrame(color.reshape(h, w, 3), depth.reshape(h, w), float(timestamp), float(camera_yaw), body_pose, agent_state)


def capture_rotation_scan(
    scene: SceneSpec,
    agent: AgentState,
    intrinsics: CameraIntrinsics,
    rig: CameraRig,
    t0: float = 0.0,
    interval: float = SCAN_INTERVAL,
    max_depth: float = MAX_DEPTH,
) -> List[RgbdFrame]:
    """One frame per rig yaw from a stationary body pose, timestamps ``t0 + k * interval``."""
    body = agent.body_pose(scene.floor_height)
    return [
        render_rgbd(scene, body, yaw, intrinsics, rig, t0 + k * interval, agent, max_depth)
        for k, yaw in enumerate(rig.yaw_offsets)
    ]
