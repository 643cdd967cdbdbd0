"""Deterministic scripted planner used as a test oracle.

Script file (TOML)::

    format = "metricnav-script"
    version = 1
    plan = ["Exit the room", "Turn left"]     # decomposition fixture
    terminal = '{"action": {"type": "stop"}}' # after the last step (optional)
    cycle = false                             # repeat responses instead of stopping

    [[response]]
    step = 0
    text = '{"thought": "...", "action": {...}}'  # emitted verbatim

    [[response]]
    step = 1
    world = [1.5, 0.0]      # or: a floor target, rendered as a bev action
    thought = "..."

    [[response]]
    step = 2
    attempt = 1             # optional; otherwise attempt 0 is reused on retries
    text = "..."

Steps must cover 0..n-1 without gaps.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import tomli

from ..reasoning.prompt import TaskPlan
from .base import PlannerBackend, PlannerInputError, PlannerRequest, PlannerResponse

SCRIPT_FORMAT = "metricnav-script"
SCRIPT_VERSION = 1
DEFAULT_TERMINAL = '{"thought": "Script finished.", "action": {"type": "stop"}}'


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptEntry:
    step: int
    attempt: int = 0
    text: Optional[str] = None
    world: Optional[Tuple[float, float]] = None
    thought: str = ""

    def __post_init__(self) -> None:
        if (self.text is None) == (self.world is None):
            raise ScriptError(f"step {self.step}: exactly one of 'text' or 'world' is required")


@dataclass(frozen=True)
class ScriptedPolicy:
    entries: Dict[Tuple[int, int], ScriptEntry]
    terminal: str = DEFAULT_TERMINAL
    plan: Tuple[str, ...] = ()
    cycle: bool = False
    n_steps: int = field(init=False)

    def __post_init__(self) -> None:
        steps = sorted({s for s, _ in self.entries})
        if steps != list(range(len(steps))):
            raise ScriptError(f"script steps must cover 0..n-1 without gaps, got {steps}")
        if not self.terminal:
            raise ScriptError("terminal response is empty")
        object.__setattr__(self, "n_steps", len(steps))

    def entry(self, step: int, attempt: int) -> Optional[ScriptEntry]:
        if self.n_steps == 0:
            return None
        if step >= self.n_steps:
            if not self.cycle:
                return None
            step %= self.n_steps
        return self.entries.get((step, attempt)) or self.entries[(step, 0)]


def load_script(path: Union[str, Path]) -> ScriptedPolicy:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ScriptError(f"{path}: {exc}") from exc
    if data.get("format") != SCRIPT_FORMAT or data.get("version") != SCRIPT_VERSION:
        raise ScriptError(f"{path}: expected format {SCRIPT_FORMAT!r} version {SCRIPT_VERSION}")
    entries = {}
    for k, raw in enumerate(data.get("response", [])):
        where = f"{path}: response[{k}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("step"), int):
            raise ScriptError(f"{where}: needs an integer 'step'")
        world = raw.get("world")
        if world is not None:
            if not (isinstance(world, list) and len(world) == 2 and all(isinstance(c, (int, float)) for c in world)):
                raise ScriptError(f"{where}: 'world' must be [x, y]")
            world = (float(world[0]), float(world[1]))
        try:
            e = ScriptEntry(raw["step"], int(raw.get("attempt", 0)), raw.get("text"), world, str(raw.get("thought", "")))
        except ScriptError as exc:
            raise ScriptError(f"{where}: {exc}") from exc
        key = (e.step, e.attempt)
        if key in entries:
            raise ScriptError(f"{where}: duplicate step/attempt {key}")
        entries[key] = e
    plan = data.get("plan", [])
    if not isinstance(plan, list) or not all(isinstance(p, str) for p in plan):
        raise ScriptError(f"{path}: 'plan' must be a list of strings")
    try:
        return ScriptedPolicy(
            entries, str(data.get("terminal", DEFAULT_TERMINAL)), tuple(plan), bool(data.get("cycle", False))
        )
    except ScriptError as exc:
        raise ScriptError(f"{path}: {exc}") from exc


def render_world_entry(entry: ScriptEntry, request: PlannerRequest) -> str:
    """Bev waypoint response hitting ``entry.world`` on this prompt's map."""
    bev = request.prompt.bev
    u, v = bev.world_to_normalized(*entry.world)
    u = min(max(int(math.floor(u + 0.5)), 0), bev.grid_cells)
    v = min(max(int(math.floor(v + 0.5)), 0), bev.grid_cells)
    return json.dumps({"thought": entry.thought, "action": {"type": "waypoint", "view": "bev", "u": u, "v": v}})


class ScriptedBackend(PlannerBackend):
    backend_id = "scripted"

    def __init__(self, policy: Optional[ScriptedPolicy] = None, script_dir: Optional[Path] = None) -> None:
        super().__init__()
        self._fixed = policy
        self.policy = policy
        self.script_dir = script_dir

    def begin_episode(self, episode, episode_dir: Optional[Path] = None) -> None:
        super().begin_episode(episode)
        if self._fixed is not None:
            self.policy = self._fixed
            return
        if episode.script is None:
            raise PlannerInputError(f"episode {episode.id!r} has no script for the scripted backend")
        p = Path(episode.script)
        if not p.is_absolute():
            p = (episode_dir or self.script_dir or Path(".")) / p
        self.policy = load_script(p)

    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        if self.policy is None:
            raise PlannerInputError("scripted backend has no policy; call begin_episode first")
        t0 = time.perf_counter()
        entry = self.policy.entry(request.step, request.attempt)
        if entry is None:
            raw = self.policy.terminal
        elif entry.text is not None:
            raw = entry.text
        else:
            raw = render_world_entry(entry, request)
        return PlannerResponse(raw, time.perf_counter() - t0, self.backend_id)

    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        if self.policy is None:
            raise PlannerInputError("scripted backend has no policy; call begin_episode first")
        return TaskPlan.from_pairs((p, False) for p in self.policy.plan)
