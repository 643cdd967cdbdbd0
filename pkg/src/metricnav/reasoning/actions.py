"""Structured planner responses: parsing, validation and canonical formatting.

Response schema::

    {"thought": str,
     "todo": [{"text": str, "done": bool}, ...],
     "action": {"type": "waypoint", "view": "bev" | "ego_0" .. "ego_3", "u": int, "v": int}
               | {"type": "stop"}}

The object may be wrapped in prose or a code fence; the first decodable
object that carries an ``action`` key wins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Union

from ..imaging import GRID_MAX
from .prompt import PlanItem, TaskPlan
from .views import VIEW_IDS

WAYPOINT = "waypoint"
STOP = "stop"
VALID_VIEWS = ("bev",) + VIEW_IDS

_decoder = json.JSONDecoder()


class ActionError(ValueError):
    pass


class ActionParseError(ActionError):
    """No structured object could be recovered from the response."""


class ActionValidationError(ActionError):
    """An object was found but breaks the schema or its value ranges."""


@dataclass(frozen=True)
class SpatialAction:
    kind: str
    view: Optional[str] = None
    u: Optional[int] = None
    v: Optional[int] = None
    thought: str = ""
    updated_plan: Optional[TaskPlan] = None

    def __post_init__(self) -> None:
        if self.kind == WAYPOINT:
            if self.view not in VALID_VIEWS:
                raise ActionValidationError(f"unknown view id {self.view!r}")
            for name, val in (("u", self.u), ("v", self.v)):
                if not isinstance(val, int) or isinstance(val, bool) or not 0 <= val <= GRID_MAX:
                    raise ActionValidationError(f"{name}={val!r} outside [0, {GRID_MAX}]")
        elif self.kind == STOP:
            if self.view is not None or self.u is not None or self.v is not None:
                raise ActionValidationError("stop action carries no view or coordinates")
        else:
            raise ActionValidationError(f"unknown action type {self.kind!r}")

    def describe(self) -> str:
        if self.kind == STOP:
            return "stop"
        return f"waypoint({self.view},{self.u},{self.v})"


def find_object(text: str) -> dict:
    first = None
    idx = text.find("{")
    while idx != -1:
        try:
            obj, _ = _decoder.raw_decode(text, idx)
        except (ValueError, RecursionError):
            obj = None
        if isinstance(obj, dict):
            if "action" in obj:
                return obj
            if first is None:
                first = obj
        idx = text.find("{", idx + 1)
    if first is not None:
        return first
    raise ActionParseError("no JSON object found in response")


def _coord(name: str, val: Any) -> int:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ActionValidationError(f"{name} must be a number, got {type(val).__name__}")
    if not math.isfinite(val):
        raise ActionValidationError(f"{name} must be finite")
    # fractional coordinates snap to the nearest grid unit
    iv = int(math.floor(val + 0.5))
    if not 0 <= iv <= GRID_MAX:
        raise ActionValidationError(f"{name}={val} outside [0, {GRID_MAX}]")
    return iv


def plan_from_todo(todo: Any) -> Optional[TaskPlan]:
    if todo is None:
        return None
    if not isinstance(todo, list):
        raise ActionValidationError("todo must be a list")
    items = []
    for entry in todo:
        if isinstance(entry, str):
            items.append(PlanItem(entry, False))
        elif isinstance(entry, dict) and isinstance(entry.get("text"), str):
            done = entry.get("done", False)
            if not isinstance(done, bool):
                raise ActionValidationError("todo item 'done' must be a boolean")
            items.append(PlanItem(entry["text"], done))
        else:
            raise ActionValidationError(f"malformed todo item {entry!r:.60}")
    return TaskPlan(tuple(items))


def parse_action(response: Union[str, bytes]) -> SpatialAction:
    """Extract a validated SpatialAction from raw planner output.

    Raises ActionParseError or ActionValidationError; never anything else.
    """
    if isinstance(response, (bytes, bytearray)):
        response = bytes(response).decode("utf-8", errors="replace")
    if not isinstance(response, str):
        raise ActionParseError(f"response must be text, got {type(response).__name__}")
    obj = find_object(response)

    thought = obj.get("thought", "")
    if not isinstance(thought, str):
        raise ActionValidationError("thought must be a string")
    plan = plan_from_todo(obj.get("todo"))

    act = obj.get("action")
    if not isinstance(act, dict):
        raise ActionValidationError("missing or malformed 'action' object")
    kind = act.get("type")
    if not isinstance(kind, str):
        raise ActionValidationError("action.type must be a string")
    kind = kind.strip().lower()
    if kind == STOP:
        return SpatialAction(STOP, thought=thought, updated_plan=plan)
    if kind != WAYPOINT:
        raise ActionValidationError(f"unknown action type {kind!r}")
    view = act.get("view")
    if not isinstance(view, str) or view.strip().lower() not in VALID_VIEWS:
        raise ActionValidationError(f"unknown view id {view!r}")
    if "u" not in act or "v" not in act:
        raise ActionValidationError("waypoint action needs u and v")
    return SpatialAction(
        WAYPOINT,
        view.strip().lower(),
        _coord("u", act["u"]),
        _coord("v", act["v"]),
        thought=thought,
        updated_plan=plan,
    )


def format_action(action: SpatialAction) -> str:
    """Canonical single-line JSON for an action; round-trips through parse_action."""
    body: dict = {"thought": action.thought}
    if action.updated_plan is not None:
        body["todo"] = [{"text": i.text, "done": i.done} for i in action.updated_plan.items]
    if action.kind == STOP:
        body["action"] = {"type": STOP}
    else:
        body["action"] = {"type": WAYPOINT, "view": action.view, "u": action.u, "v": action.v}
    return json.dumps(body, ensure_ascii=False)
