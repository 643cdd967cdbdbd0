"""Run configuration: every tunable of the navigation loop in one versioned file.

Example ``run.toml`` (all keys optional except the header)::

    format = "metricnav-run"
    version = 1
    episodes = "fixtures/suite.toml"   # suite file, relative to this file
    output_dir = "runs/suite"
    backend = "scripted"               # scripted | greedy | remote
    seed = 0

    [thresholds]
    delta_merge = 0.8      # topological node merge distance (m)
    tau_loop = 3           # visit count above which the loop alert fires
    delta_h = 0.3          # floor-change threshold (m)
    delta_s = 0.5          # view-selection proximity (m)
    d_max = 3.0            # planning horizon per waypoint (m)
    arrival_radius = 0.3   # episode ends once this close to the goal (m)
    standoff_factor = 1.5  # ego waypoints stop this many agent radii short

    [controller]
    step_size = 0.1
    turn_rate_deg = 15.0
    agent_radius = 0.18

    [camera]
    width = 128
    height = 96
    fx = 64.0
    fy = 64.0
    cx = 63.5
    cy = 47.5
    mount_height = 1.25
    pitch_deg = 0.0
    n_yaws = 8

    [map]
    voxel_size = 0.05
    margin = 0.3
    height = 3.0
    bev_size = 401

    [loop]
    max_steps = 20         # overrides each episode's own cap when set
    history_window = 5
    max_retries = 2
    probe_distance = 0.5
    stuck_steps = 3
    stuck_distance = 0.1

    [remote]
    endpoint = "http://localhost:8000/v1/navigate"
    token = ""
    timeout = 60.0
    retries = 2
    backoff = 0.5
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import tomli

from ..geometry import CameraIntrinsics, CameraRig
from ..planners.remote import RemoteConfig
from ..reasoning.grounding import GroundingConfig
from ..reasoning.views import ViewSelectConfig
from ..sim.controller import ControllerConfig
from ..topo import MemoryConfig

RUN_FORMAT = "metricnav-run"
RUN_VERSION = 1
BACKENDS = ("scripted", "greedy", "remote")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class AgentConfig:
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    rig: CameraRig = field(default_factory=CameraRig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    views: ViewSelectConfig = field(default_factory=ViewSelectConfig)
    voxel_size: float = 0.05
    map_margin: float = 0.3
    map_height: float = 3.0
    bev_size: int = 401
    arrival_radius: float = 0.3
    standoff_factor: float = 1.5
    max_steps: Optional[int] = None
    history_window: int = 5
    max_retries: int = 2
    probe_distance: float = 0.5
    stuck_steps: int = 3
    stuck_distance: float = 0.1

    @property
    def grounding(self) -> GroundingConfig:
        return GroundingConfig(
            d_max=self.controller.d_max,
            agent_radius=self.controller.agent_radius,
            standoff_factor=self.standoff_factor,
        )


@dataclass(frozen=True)
class RunConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    backend: str = "scripted"
    remote: RemoteConfig = field(default_factory=RemoteConfig)
    episodes: Optional[str] = None
    output_dir: Optional[str] = None
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        a = self.agent
        return {
            "format": RUN_FORMAT,
            "version": RUN_VERSION,
            "backend": self.backend,
            "seed": self.seed,
            "thresholds": {
                "delta_merge": a.memory.delta_merge,
                "tau_loop": a.memory.tau_loop,
                "delta_h": a.memory.delta_h,
                "delta_s": a.views.delta_s,
                "d_max": a.controller.d_max,
                "arrival_radius": a.arrival_radius,
                "standoff_factor": a.standoff_factor,
            },
            "controller": {
                "step_size": a.controller.step_size,
                "turn_rate_deg": math.degrees(a.controller.turn_rate),
                "agent_radius": a.controller.agent_radius,
            },
            "camera": {
                "width": a.intrinsics.width,
                "height": a.intrinsics.height,
                "fx": a.intrinsics.fx,
                "fy": a.intrinsics.fy,
                "cx": a.intrinsics.cx,
                "cy": a.intrinsics.cy,
                "mount_height": a.rig.mount_height,
                "pitch_deg": math.degrees(a.rig.pitch),
                "n_yaws": a.rig.n_yaws,
            },
            "map": {
                "voxel_size": a.voxel_size,
                "margin": a.map_margin,
                "height": a.map_height,
                "bev_size": a.bev_size,
            },
            "loop": {
                "max_steps": a.max_steps if a.max_steps is not None else 0,
                "history_window": a.history_window,
                "max_retries": a.max_retries,
                "probe_distance": a.probe_distance,
                "stuck_steps": a.stuck_steps,
                "stuck_distance": a.stuck_distance,
            },
        }

    def digest(self) -> str:
        """Hash of everything that influences episode outcomes.

        Paths and remote credentials are left out so a replay elsewhere
        reports the same digest.
        """
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_SCHEMA = {
    "thresholds": {
        "delta_merge": float,
        "tau_loop": int,
        "delta_h": float,
        "delta_s": float,
        "d_max": float,
        "arrival_radius": float,
        "standoff_factor": float,
    },
    "controller": {"step_size": float, "turn_rate_deg": float, "agent_radius": float},
    "camera": {
        "width": int,
        "height": int,
        "fx": float,
        "fy": float,
        "cx": float,
        "cy": float,
        "mount_height": float,
        "pitch_deg": float,
        "n_yaws": int,
    },
    "map": {"voxel_size": float, "margin": float, "height": float, "bev_size": int},
    "loop": {
        "max_steps": int,
        "history_window": int,
        "max_retries": int,
        "probe_distance": float,
        "stuck_steps": int,
        "stuck_distance": float,
    },
    "remote": {"endpoint": str, "token": str, "timeout": float, "retries": int, "backoff": float},
}
_POSITIVE = {
    "thresholds": ("delta_merge", "tau_loop", "delta_h", "delta_s", "d_max", "arrival_radius"),
    "controller": ("step_size", "turn_rate_deg", "agent_radius"),
    "camera": ("width", "height", "fx", "fy", "mount_height", "n_yaws"),
    "map": ("voxel_size", "height", "bev_size"),
    "loop": ("history_window", "probe_distance", "stuck_steps", "stuck_distance"),
    "remote": ("timeout",),
}
# loop.max_steps = 0 means "use each episode's own cap"
_NON_NEGATIVE = {
    "thresholds": ("standoff_factor",),
    "map": ("margin",),
    "loop": ("max_steps", "max_retries"),
    "remote": ("retries", "backoff"),
}
_TOP = {"format": str, "version": int, "episodes": str, "output_dir": str, "backend": str, "seed": int}


def _typed(key: str, val: Any, kind: type) -> Any:
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(key, f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(key, f"expected an integer, got {val!r}")
        return val
    if not isinstance(val, kind):
        raise ConfigError(key, f"expected {kind.__name__}, got {val!r}")
    return val


def config_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    if data.get("format") != RUN_FORMAT:
        raise ConfigError("format", f"must be {RUN_FORMAT!r}")
    if data.get("version") != RUN_VERSION:
        raise ConfigError("version", f"must be {RUN_VERSION}")
    top: Dict[str, Any] = {}
    sections: Dict[str, Dict[str, Any]] = {}
    for key, val in data.items():
        if key in _TOP:
            top[key] = _typed(key, val, _TOP[key])
        elif key in _SCHEMA:
            if not isinstance(val, dict):
                raise ConfigError(key, "must be a table")
            sec = {}
            for k, v in val.items():
                if k not in _SCHEMA[key]:
                    raise ConfigError(f"{key}.{k}", "unknown key")
                sec[k] = _typed(f"{key}.{k}", v, _SCHEMA[key][k])
            sections[key] = sec
        else:
            raise ConfigError(key, "unknown key")

    backend = top.get("backend", "scripted")
    if backend not in BACKENDS:
        raise ConfigError("backend", f"must be one of {', '.join(BACKENDS)}")

    for sec, keys in _POSITIVE.items():
        for k in keys:
            if k in sections.get(sec, {}) and not sections[sec][k] > 0:
                raise ConfigError(f"{sec}.{k}", "must be positive")
    for sec, keys in _NON_NEGATIVE.items():
        for k in keys:
            if k in sections.get(sec, {}) and sections[sec][k] < 0:
                raise ConfigError(f"{sec}.{k}", "must not be negative")

    th, ct, cam, mp, lp, rm = (sections.get(s, {}) for s in ("thresholds", "controller", "camera", "map", "loop", "remote"))
    d = AgentConfig()

    def build(key: str, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from exc

    intr = build("camera", lambda: CameraIntrinsics(
        cam.get("fx", d.intrinsics.fx), cam.get("fy", d.intrinsics.fy),
        cam.get("cx", d.intrinsics.cx), cam.get("cy", d.intrinsics.cy),
        cam.get("width", d.intrinsics.width), cam.get("height", d.intrinsics.height),
    ))
    rig = build("camera", lambda: CameraRig(
        cam.get("mount_height", d.rig.mount_height),
        math.radians(cam.get("pitch_deg", math.degrees(d.rig.pitch))),
        cam.get("n_yaws", d.rig.n_yaws),
    ))
    controller = build("controller", lambda: ControllerConfig(
        d_max=th.get("d_max", d.controller.d_max),
        step_size=ct.get("step_size", d.controller.step_size),
        turn_rate=math.radians(ct.get("turn_rate_deg", math.degrees(d.controller.turn_rate))),
        agent_radius=ct.get("agent_radius", d.controller.agent_radius),
    ))
    memory = build("thresholds", lambda: MemoryConfig(
        th.get("delta_merge", d.memory.delta_merge), th.get("tau_loop", d.memory.tau_loop), th.get("delta_h", d.memory.delta_h)
    ))
    views = build("thresholds.delta_s", lambda: ViewSelectConfig(th.get("delta_s", d.views.delta_s)))
    max_steps = lp.get("max_steps", 0) or None
    for key, val in (("loop.max_steps", max_steps or 1), ("loop.history_window", lp.get("history_window", 1)),
                     ("loop.stuck_steps", lp.get("stuck_steps", 1)), ("map.bev_size", mp.get("bev_size", 2) - 1)):
        if val < 1:
            raise ConfigError(key, "must be positive")
    for key, val in (("map.voxel_size", mp.get("voxel_size", 1.0)), ("thresholds.arrival_radius", th.get("arrival_radius", 1.0)),
                     ("map.height", mp.get("height", 1.0))):
        if val <= 0:
            raise ConfigError(key, "must be positive")
    if lp.get("max_retries", 0) < 0:
        raise ConfigError("loop.max_retries", "must be >= 0")

    agent = AgentConfig(
        intrinsics=intr,
        rig=rig,
        controller=controller,
        memory=memory,
        views=views,
        voxel_size=mp.get("voxel_size", d.voxel_size),
        map_margin=mp.get("margin", d.map_margin),
        map_height=mp.get("height", d.map_height),
        bev_size=mp.get("bev_size", d.bev_size),
        arrival_radius=th.get("arrival_radius", d.arrival_radius),
        standoff_factor=th.get("standoff_factor", d.standoff_factor),
        max_steps=max_steps,
        history_window=lp.get("history_window", d.history_window),
        max_retries=lp.get("max_retries", d.max_retries),
        probe_distance=lp.get("probe_distance", d.probe_distance),
        stuck_steps=lp.get("stuck_steps", d.stuck_steps),
        stuck_distance=lp.get("stuck_distance", d.stuck_distance),
    )
    remote = RemoteConfig(
        endpoint=rm.get("endpoint", ""),
        token=rm.get("token") or None,
        timeout=rm.get("timeout", RemoteConfig.timeout),
        retries=rm.get("retries", RemoteConfig.retries),
        backoff=rm.get("backoff", RemoteConfig.backoff),
    )

    def rel(p: Optional[str]) -> Optional[str]:
        if p is None or base_dir is None or Path(p).is_absolute():
            return p
        return str(base_dir / p)

    return RunConfig(agent, backend, remote, rel(top.get("episodes")), rel(top.get("output_dir")), top.get("seed", 0))


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"{path}: {exc}") from exc
    return config_from_dict(data, path.parent)


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
