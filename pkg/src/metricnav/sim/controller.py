"""Deterministic rotate-then-translate waypoint controller with disc collision checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from ..geometry import AgentState, angular_distance, normalize_angle
from .scene import DEFAULT_AGENT_RADIUS, SceneSpec

TRAJECTORY_HEADER = "# metricnav trajectory v1: t x y theta"


class ControllerError(ValueError):
    pass


class HorizonExceededError(ControllerError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    d_max: float = 3.0
    step_size: float = 0.1
    turn_rate: float = math.radians(15.0)
    agent_radius: float = DEFAULT_AGENT_RADIUS

    def __post_init__(self) -> None:
        if min(self.d_max, self.step_size, self.turn_rate, self.agent_radius) <= 0:
            raise ControllerError("controller parameters must be positive")


def execute_waypoint(
    scene: SceneSpec,
    state: AgentState,
    waypoint: Sequence[float],
    config: ControllerConfig = ControllerConfig(),
) -> Tuple[AgentState, bool, List[AgentState]]:
    """Turn in place toward the waypoint, then drive to it in micro-steps.

    Returns ``(final_state, reached, path)``; ``path`` starts with ``state``
    and holds every micro-step. A micro-step that would bring the agent disc
    into a box (or out of bounds) is not taken and the drive stops there.
    """
    wx, wy = float(waypoint[0]), float(waypoint[1])
    dx, dy = wx - state.x, wy - state.y
    dist = math.hypot(dx, dy)
    if dist > config.d_max + 1e-9:
        raise HorizonExceededError(f"waypoint is {dist:.3f} m away, beyond d_max={config.d_max} m")
    path = [state]
    if dist < 1e-9:
        return state, True, path

    target = math.atan2(dy, dx)
    heading = state.theta
    while angular_distance(heading, target) > 1e-12:
        delta = math.remainder(target - heading, 2 * math.pi)
        turn = max(-config.turn_rate, min(config.turn_rate, delta))
        heading = normalize_angle(heading + turn)
        if abs(delta) <= config.turn_rate:
            heading = target
        path.append(AgentState(state.x, state.y, heading))

    ux, uy = dx / dist, dy / dist
    n = int(math.ceil(dist / config.step_size - 1e-12))
    current = path[-1]
    for k in range(1, n + 1):
        s = min(k * config.step_size, dist)
        nx, ny = state.x + s * ux, state.y + s * uy
        if k == n:
            nx, ny = wx, wy
        if not scene.is_free(nx, ny, config.agent_radius):
            return current, False, path
        current = AgentState(nx, ny, heading)
        path.append(current)
    return current, True, path


def write_trajectory(states: Sequence[AgentState], path: Union[str, Path]) -> None:
    """Line-oriented log, one micro-step per line: index, x, y, theta (repr floats)."""
    lines = [TRAJECTORY_HEADER]
    lines += [f"{t} {s.x!r} {s.y!r} {s.theta!r}" for t, s in enumerate(states)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory(path: Union[str, Path]) -> List[AgentState]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ControllerError(f"{path}:{lineno}: expected 't x y theta'")
        try:
            out.append(AgentState(float(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise ControllerError(f"{path}:{lineno}: {exc}") from exc
    return out
