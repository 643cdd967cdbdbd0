from .controller import (
    ControllerConfig,
    ControllerError,
    HorizonExceededError,
    execute_waypoint,
    read_trajectory,
    write_trajectory,
)
from .render import MAX_DEPTH, capture_rotation_scan, render_rgbd
from .scene import (
    Box,
    EpisodeSpec,
    SceneError,
    SceneParseError,
    SceneSpec,
    SceneValidationError,
    load_episode,
    load_scene,
    polyline_length,
    resolve_scene_path,
    save_episode,
    save_scene,
)

__all__ = [
    "Box",
    "ControllerConfig",
    "ControllerError",
    "EpisodeSpec",
    "HorizonExceededError",
    "MAX_DEPTH",
    "SceneError",
    "SceneParseError",
    "SceneSpec",
    "SceneValidationError",
    "capture_rotation_scan",
    "execute_waypoint",
    "load_episode",
    "load_scene",
    "polyline_length",
    "read_trajectory",
    "render_rgbd",
    "resolve_scene_path",
    "save_episode",
    "save_scene",
    "write_trajectory",
]
