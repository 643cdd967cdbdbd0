"""Geometric baseline that reads the goal directly. Test-only: it uses
privileged episode information no language model would have."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from ..bev import FREE, BevImage
from ..reasoning.prompt import TaskPlan
from ..sim.scene import DEFAULT_AGENT_RADIUS
from .base import PlannerBackend, PlannerInputError, PlannerRequest, PlannerResponse

GREEDY_PLAN = "Reach the goal"


@dataclass(frozen=True)
class GreedyConfig:
    d_max: float = 3.0
    agent_radius: float = DEFAULT_AGENT_RADIUS
    clearance_margin: float = 0.07
    stop_radius: float = 0.3
    min_progress: float = 0.05


def _stop(thought: str) -> str:
    return json.dumps({"thought": thought, "action": {"type": "stop"}})


def choose_target(bev: BevImage, goal: Tuple[float, float], config: GreedyConfig) -> Optional[Tuple[int, int]]:
    """Pixel (col, row) of the reachable free cell closest to the goal, or None."""
    mpp = bev.meters_per_pixel
    free = bev.classes == FREE
    clearance = ndimage.distance_transform_edt(free) * mpp
    n = bev.size
    cols = np.arange(n)
    xs = bev.world_origin[0] + cols * mpp
    ys = bev.world_origin[1] - cols * mpp
    ax, ay = bev.agent.x, bev.agent.y
    d_agent = np.hypot(xs[None, :] - ax, ys[:, None] - ay)
    d_goal = np.hypot(xs[None, :] - goal[0], ys[:, None] - goal[1])
    ok = free & (clearance >= config.agent_radius + config.clearance_margin) & (d_agent <= config.d_max - 0.05)
    rows, cs = np.nonzero(ok)
    if rows.size == 0:
        return None
    order = np.lexsort((cs, rows, d_goal[rows, cs]))
    for idx in order[:4000]:
        r, c = int(rows[idx]), int(cs[idx])
        if _line_clear(bev, clearance, (ax, ay), (xs[c], ys[r]), config.agent_radius):
            return c, r
    return None


def _line_clear(bev: BevImage, clearance: np.ndarray, a, b, radius: float) -> bool:
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    step = bev.meters_per_pixel
    n = max(int(math.ceil(length / step)), 1)
    for k in range(n + 1):
        s = k / n * length
        if s < radius:
            continue
        x = a[0] + (b[0] - a[0]) * s / length
        y = a[1] + (b[1] - a[1]) * s / length
        c, r = bev.world_to_pixel(x, y)
        if not (0 <= r < bev.size and 0 <= c < bev.size) or clearance[r, c] < radius:
            return False
    return True


class GreedyBackend(PlannerBackend):
    backend_id = "greedy"

    def __init__(self, config: GreedyConfig = GreedyConfig()) -> None:
        super().__init__()
        self.config = config
        self.goal: Optional[Tuple[float, float]] = None

    def begin_episode(self, episode, episode_dir=None) -> None:
        super().begin_episode(episode, episode_dir)
        self.goal = (float(episode.goal[0]), float(episode.goal[1]))

    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        if self.goal is None:
            raise PlannerInputError("greedy backend needs begin_episode before decide")
        t0 = time.perf_counter()
        raw = self._respond(request.prompt.bev)
        return PlannerResponse(raw, time.perf_counter() - t0, self.backend_id)

    def _respond(self, bev: BevImage) -> str:
        cfg = self.config
        here = math.hypot(bev.agent.x - self.goal[0], bev.agent.y - self.goal[1])
        if here <= cfg.stop_radius:
            return _stop("At the goal.")
        pick = choose_target(bev, self.goal, cfg)
        if pick is None:
            return _stop("No reachable free space.")
        c, r = pick
        x, y = bev.pixel_to_world(c, r)
        if math.hypot(x - self.goal[0], y - self.goal[1]) > here - cfg.min_progress:
            return _stop("No further progress possible.")
        scale = bev.grid_cells / (bev.size - 1)
        u, v = int(math.floor(c * scale + 0.5)), int(math.floor(r * scale + 0.5))
        return json.dumps(
            {
                "thought": f"Free cell nearest the goal is at ({x:.2f}, {y:.2f}).",
                "todo": [{"text": GREEDY_PLAN, "done": False}],
                "action": {"type": "waypoint", "view": "bev", "u": u, "v": v},
            }
        )

    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        return TaskPlan.from_pairs([(GREEDY_PLAN, False)])
