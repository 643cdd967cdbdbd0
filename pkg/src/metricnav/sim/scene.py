"""Analytic box scenes and episode definitions, stored as versioned TOML."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import tomli
import tomli_w

from ..geometry import AgentState

SCENE_FORMAT = "metricnav-scene"
EPISODE_FORMAT = "metricnav-episode"
FORMAT_VERSION = 1

DEFAULT_AGENT_RADIUS = 0.18


class SceneError(ValueError):
    pass


class SceneParseError(SceneError):
    """Malformed file; the message names the file and the offending line or field."""


class SceneValidationError(SceneError):
    """Well-formed file whose contents break a scene or episode invariant."""


@dataclass(frozen=True)
class Box:
    min: Tuple[float, float, float]
    max: Tuple[float, float, float]
    color: Tuple[int, int, int] = (200, 200, 200)
    label: str = "box"

    def footprint_distance(self, x: float, y: float) -> float:
        """Planar distance from (x, y) to the box footprint; 0 inside."""
        dx = max(self.min[0] - x, 0.0, x - self.max[0])
        dy = max(self.min[1] - y, 0.0, y - self.max[1])
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class SceneSpec:
    boxes: Tuple[Box, ...]
    bounds: Tuple[Tuple[float, float], Tuple[float, float]]
    floor_height: float = 0.0
    floor_color: Tuple[int, int, int] = (110, 110, 110)
    name: str = "scene"

    def __post_init__(self) -> None:
        (x0, y0), (x1, y1) = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise SceneValidationError(f"scene {self.name!r}: bounds must have positive extent")
        for k, b in enumerate(self.boxes):
            if any(lo > hi for lo, hi in zip(b.min, b.max)):
                raise SceneValidationError(f"scene {self.name!r}: box[{k}] ({b.label}) has min > max")
            if b.min[0] < x0 - 1e-9 or b.min[1] < y0 - 1e-9 or b.max[0] > x1 + 1e-9 or b.max[1] > y1 + 1e-9:
                raise SceneValidationError(f"scene {self.name!r}: box[{k}] ({b.label}) lies outside bounds")
            if b.min[2] < self.floor_height - 1e-9:
                raise SceneValidationError(f"scene {self.name!r}: box[{k}] ({b.label}) extends below the floor")

    @property
    def box_min(self) -> np.ndarray:
        return np.array([b.min for b in self.boxes], dtype=float).reshape(-1, 3)

    @property
    def box_max(self) -> np.ndarray:
        return np.array([b.max for b in self.boxes], dtype=float).reshape(-1, 3)

    def clearance(self, x: float, y: float) -> float:
        """Planar distance to the nearest box footprint or scene boundary."""
        (x0, y0), (x1, y1) = self.bounds
        d = min(x - x0, x1 - x, y - y0, y1 - y)
        for b in self.boxes:
            d = min(d, b.footprint_distance(x, y))
        return d

    def is_free(self, x: float, y: float, radius: float = 0.0) -> bool:
        return self.clearance(x, y) >= radius


@dataclass(frozen=True)
class EpisodeSpec:
    id: str
    scene_path: str
    start: AgentState
    goal: Tuple[float, float]
    instruction: str
    shortest_path_length: float
    reference_path: Tuple[Tuple[float, float], ...]
    success_radius: float = 3.0
    max_steps: int = 20
    script: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.shortest_path_length > 0:
            raise SceneValidationError(f"episode {self.id!r}: shortest_path_length must be positive")
        if self.success_radius <= 0:
            raise SceneValidationError(f"episode {self.id!r}: success_radius must be positive")
        if self.max_steps < 1:
            raise SceneValidationError(f"episode {self.id!r}: max_steps must be >= 1")
        if not self.reference_path:
            raise SceneValidationError(f"episode {self.id!r}: reference_path is empty")
        if not self.instruction.strip():
            raise SceneValidationError(f"episode {self.id!r}: instruction is empty")

    def validate_against(self, scene: SceneSpec, agent_radius: float = DEFAULT_AGENT_RADIUS) -> None:
        if not scene.is_free(self.start.x, self.start.y, agent_radius):
            raise SceneValidationError(
                f"episode {self.id!r}: start ({self.start.x}, {self.start.y}) is not in free space"
            )
        if not scene.is_free(self.goal[0], self.goal[1], 0.0) or scene.clearance(*self.goal) <= 0:
            raise SceneValidationError(f"episode {self.id!r}: goal {self.goal} is not in free space")


# ---------------------------------------------------------------- parsing


def _read_toml(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneParseError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise SceneParseError(f"{path}: {exc}") from exc


def _check_header(data: Dict[str, Any], fmt: str, path: Path) -> None:
    if data.get("format") != fmt:
        raise SceneParseError(f"{path}: field 'format' must be {fmt!r}")
    if data.get("version") != FORMAT_VERSION:
        raise SceneParseError(f"{path}: field 'version' must be {FORMAT_VERSION}, got {data.get('version')!r}")


def _vec(data: Dict[str, Any], key: str, n: int, where: str, default=None) -> Tuple[float, ...]:
    val = data.get(key, default)
    if val is None:
        raise SceneParseError(f"{where}: missing field '{key}'")
    if not isinstance(val, list) or len(val) != n or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in val
    ):
        raise SceneParseError(f"{where}: field '{key}' must be a list of {n} numbers")
    return tuple(float(v) for v in val)


def _num(data: Dict[str, Any], key: str, where: str, default=None) -> float:
    val = data.get(key, default)
    if val is None:
        raise SceneParseError(f"{where}: missing field '{key}'")
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise SceneParseError(f"{where}: field '{key}' must be a number")
    return float(val)


def _color(data: Dict[str, Any], key: str, where: str, default) -> Tuple[int, int, int]:
    c = _vec(data, key, 3, where, default)
    if not all(0 <= v <= 255 and v == int(v) for v in c):
        raise SceneParseError(f"{where}: field '{key}' must hold integers in [0, 255]")
    return tuple(int(v) for v in c)


def scene_from_dict(data: Dict[str, Any], where: str = "scene") -> SceneSpec:
    boxes = []
    raw_boxes = data.get("box", [])
    if not isinstance(raw_boxes, list):
        raise SceneParseError(f"{where}: 'box' must be an array of tables")
    for k, b in enumerate(raw_boxes):
        bw = f"{where}: box[{k}]"
        if not isinstance(b, dict):
            raise SceneParseError(f"{bw} must be a table")
        boxes.append(
            Box(
                _vec(b, "min", 3, bw),
                _vec(b, "max", 3, bw),
                _color(b, "color", bw, [200, 200, 200]),
                str(b.get("label", f"box{k}")),
            )
        )
    bounds = data.get("bounds")
    if not (isinstance(bounds, list) and len(bounds) == 2):
        raise SceneParseError(f"{where}: field 'bounds' must be [[xmin, ymin], [xmax, ymax]]")
    lo = _vec({"lo": bounds[0]}, "lo", 2, f"{where}: bounds")
    hi = _vec({"hi": bounds[1]}, "hi", 2, f"{where}: bounds")
    return SceneSpec(
        tuple(boxes),
        (lo, hi),
        _num(data, "floor_height", where, 0.0),
        _color(data, "floor_color", where, [110, 110, 110]),
        str(data.get("name", "scene")),
    )


def scene_to_dict(scene: SceneSpec) -> Dict[str, Any]:
    return {
        "format": SCENE_FORMAT,
        "version": FORMAT_VERSION,
        "name": scene.name,
        "floor_height": scene.floor_height,
        "floor_color": list(scene.floor_color),
        "bounds": [list(scene.bounds[0]), list(scene.bounds[1])],
        "box": [
            {"label": b.label, "min": list(b.min), "max": list(b.max), "color": list(b.color)} for b in scene.boxes
        ],
    }


def load_scene(path: Union[str, Path]) -> SceneSpec:
    path = Path(path)
    data = _read_toml(path)
    _check_header(data, SCENE_FORMAT, path)
    return scene_from_dict(data, str(path))


def save_scene(scene: SceneSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(tomli_w.dumps(scene_to_dict(scene)), encoding="utf-8")


def episode_from_dict(data: Dict[str, Any], where: str = "episode") -> EpisodeSpec:
    for key in ("id", "scene", "instruction"):
        if not isinstance(data.get(key), str):
            raise SceneParseError(f"{where}: field '{key}' must be a string")
    start = _vec(data, "start", 2, where)
    heading = _num(data, "start_heading_deg", where, 0.0)
    ref = data.get("reference_path")
    if not isinstance(ref, list) or not ref:
        raise SceneParseError(f"{where}: field 'reference_path' must be a nonempty list of [x, y]")
    ref_pts = tuple(_vec({"p": p}, "p", 2, f"{where}: reference_path[{k}]") for k, p in enumerate(ref))
    max_steps = data.get("max_steps", 20)
    if not isinstance(max_steps, int) or isinstance(max_steps, bool):
        raise SceneParseError(f"{where}: field 'max_steps' must be an integer")
    script = data.get("script")
    if script is not None and not isinstance(script, str):
        raise SceneParseError(f"{where}: field 'script' must be a string")
    return EpisodeSpec(
        id=data["id"],
        scene_path=data["scene"],
        start=AgentState(start[0], start[1], math.radians(heading)),
        goal=_vec(data, "goal", 2, where),
        instruction=data["instruction"],
        shortest_path_length=_num(data, "shortest_path_length", where),
        reference_path=ref_pts,
        success_radius=_num(data, "success_radius", where, 3.0),
        max_steps=max_steps,
        script=script,
    )


def episode_to_dict(ep: EpisodeSpec) -> Dict[str, Any]:
    out = {
        "format": EPISODE_FORMAT,
        "version": FORMAT_VERSION,
        "id": ep.id,
        "scene": ep.scene_path,
        "instruction": ep.instruction,
        "start": [ep.start.x, ep.start.y],
        "start_heading_deg": math.degrees(ep.start.theta),
        "goal": list(ep.goal),
        "success_radius": ep.success_radius,
        "shortest_path_length": ep.shortest_path_length,
        "reference_path": [list(p) for p in ep.reference_path],
        "max_steps": ep.max_steps,
    }
    if ep.script is not None:
        out["script"] = ep.script
    return out


def load_episode(path: Union[str, Path], validate_scene: bool = True) -> EpisodeSpec:
    """Parse an episode file; by default also checks start/goal against its scene."""
    path = Path(path)
    data = _read_toml(path)
    _check_header(data, EPISODE_FORMAT, path)
    ep = episode_from_dict(data, str(path))
    if validate_scene:
        ep.validate_against(load_scene(resolve_scene_path(ep, path)))
    return ep


def save_episode(ep: EpisodeSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(tomli_w.dumps(episode_to_dict(ep)), encoding="utf-8")


def resolve_scene_path(ep: EpisodeSpec, episode_path: Union[str, Path]) -> Path:
    p = Path(ep.scene_path)
    return p if p.is_absolute() else Path(episode_path).parent / p


def polyline_length(points: Sequence[Sequence[float]]) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
