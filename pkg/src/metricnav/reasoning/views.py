"""Pick four near-orthogonal views from the accumulated frame stream."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ..geometry import AgentState, angular_distance
from ..tsdf import RgbdFrame

VIEW_IDS = ("ego_0", "ego_1", "ego_2", "ego_3")
VIEW_NAMES = ("front", "right", "back", "left")
_TIE_EPS = 1e-9


class CoverageError(LookupError):
    """No stored frame is close enough to the agent to build the view set."""


@dataclass(frozen=True)
class ViewSelectConfig:
    """``cardinal_angles_deg`` are measured clockwise from the agent heading,
    so ego_1 looks right and ego_3 looks left."""

    delta_s: float = 0.5
    cardinal_angles_deg: Tuple[float, ...] = (0.0, 90.0, 180.0, 270.0)

    def __post_init__(self) -> None:
        if self.delta_s <= 0:
            raise ValueError("delta_s must be positive")

    def target_headings(self, theta: float) -> List[float]:
        return [theta - math.radians(a) for a in self.cardinal_angles_deg]


def select_orthogonal_views(
    frames: Sequence[RgbdFrame],
    now: AgentState,
    config: ViewSelectConfig = ViewSelectConfig(),
    now_time: Optional[float] = None,
) -> List[RgbdFrame]:
    """For each cardinal direction, the nearby frame whose heading best matches it.

    Candidates are frames captured within ``delta_s`` of the agent (and not
    after ``now_time``). Among them the smallest wrapped angular error wins;
    ties go to the most recent timestamp.
    """
    cands = [
        f
        for f in frames
        if math.hypot(f.agent_state.x - now.x, f.agent_state.y - now.y) < config.delta_s
        and (now_time is None or f.timestamp <= now_time)
    ]
    if not cands:
        raise CoverageError(f"no frame within {config.delta_s} m of ({now.x:.2f}, {now.y:.2f})")
    chosen = []
    for target in config.target_headings(now.theta):
        best, best_err = None, math.inf
        for f in cands:
            err = angular_distance(f.heading, target)
            if err < best_err - _TIE_EPS or (abs(err - best_err) <= _TIE_EPS and f.timestamp > best.timestamp):
                best, best_err = f, min(err, best_err)
        chosen.append(best)
    return chosen
