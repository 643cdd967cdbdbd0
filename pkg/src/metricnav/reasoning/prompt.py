"""Task plan, execution history and the multimodal prompt bundle.

Serialized prompt layout (UTF-8, ``\\n`` line endings)::

    METRICNAV-PROMPT v1
    ## TASK PLAN (<n> bytes)
    <block>
    ## STATE (<n> bytes)
    <block>
    ## HISTORY (<n> bytes)
    <block>
    ## INSTRUCTION (<n> bytes)
    <block>
    ## VIEWS (<n> bytes)
    <block>
    ## RESPONSE FORMAT (<n> bytes)
    <block>

``<n>`` is the UTF-8 byte length of the block that follows, excluding its
trailing newline. Free text inside list-like blocks (plan items, alerts,
history thoughts) is escaped so a block never gains extra lines:
backslash becomes ``\\\\``, newline ``\\n``, carriage return ``\\r``.
Images travel as PNG attachments in the order bev, ego_0 .. ego_3.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..bev import BevImage
from ..imaging import annotate_grid, encode_png
from .views import VIEW_IDS, VIEW_NAMES

PROMPT_HEADER = "METRICNAV-PROMPT v1"
HISTORY_WINDOW = 5
NO_HISTORY = "(no history)"

RESPONSE_FORMAT = """\
Reply with one JSON object:
{"thought": "<reasoning>",
 "todo": [{"text": "<plan item>", "done": <true|false>}, ...],
 "action": {"type": "waypoint", "view": "<bev|ego_0|ego_1|ego_2|ego_3>", "u": <0-1000>, "v": <0-1000>}}
or, to finish, "action": {"type": "stop"}.
u runs left to right and v top to bottom on the normalized grid of the chosen image."""


def escape_line(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


@dataclass(frozen=True)
class PlanItem:
    text: str
    done: bool = False


@dataclass(frozen=True)
class TaskPlan:
    """Ordered checklist. Completed items are never dropped or un-ticked."""

    items: Tuple[PlanItem, ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, bool]]) -> "TaskPlan":
        return cls(tuple(PlanItem(str(t), bool(d)) for t, d in pairs))

    def pairs(self) -> List[Tuple[str, bool]]:
        return [(i.text, i.done) for i in self.items]

    def update(self, new: Optional["TaskPlan"]) -> "TaskPlan":
        """Merge a revised checklist into this one.

        Existing items keep their order; an item reported done stays done;
        unfinished items the revision omits are dropped; new items are
        appended in the revision's order.
        """
        if new is None:
            return self
        new_done = {}
        for item in new.items:
            new_done[item.text] = new_done.get(item.text, False) or item.done
        old_done = {}
        for item in self.items:
            old_done[item.text] = old_done.get(item.text, False) or item.done
        merged = []
        seen = set()
        for item in self.items:
            if item.text in seen:
                continue
            done = old_done[item.text]
            if done or item.text in new_done:
                merged.append(PlanItem(item.text, done or new_done.get(item.text, False)))
                seen.add(item.text)
        for item in new.items:
            if item.text not in seen:
                merged.append(PlanItem(item.text, new_done[item.text]))
                seen.add(item.text)
        return TaskPlan(tuple(merged))

    def render(self) -> str:
        if not self.items:
            return "(empty plan)"
        return "\n".join(f"[{'x' if i.done else ' '}] {escape_line(i.text)}" for i in self.items)


@dataclass(frozen=True)
class HistoryEntry:
    step: int
    thought: str
    view: str
    action: str
    success: bool

    def render(self) -> str:
        outcome = "ok" if self.success else "failed"
        return f"step {self.step} | view={self.view} | action={self.action} | outcome={outcome} | thought={escape_line(self.thought)}"


@dataclass
class HistoryLog:
    entries: List[HistoryEntry] = field(default_factory=list)
    window: int = HISTORY_WINDOW

    def append(self, entry: HistoryEntry) -> None:
        self.entries.append(entry)

    def recent(self) -> List[HistoryEntry]:
        return self.entries[-self.window :] if self.window > 0 else []

    def render(self) -> str:
        shown = self.recent()
        if not shown:
            return NO_HISTORY
        return "\n".join(e.render() for e in shown)


@dataclass(frozen=True, eq=False)
class PromptBundle:
    bev: BevImage
    ego_views: Tuple[np.ndarray, ...]
    task_plan: str
    state: str
    history: str
    instruction: str
    views: str

    def __post_init__(self) -> None:
        if len(self.ego_views) != 4:
            raise ValueError(f"prompt needs exactly 4 egocentric views, got {len(self.ego_views)}")

    @property
    def blocks(self) -> List[Tuple[str, str]]:
        return [
            ("TASK PLAN", self.task_plan),
            ("STATE", self.state),
            ("HISTORY", self.history),
            ("INSTRUCTION", self.instruction),
            ("VIEWS", self.views),
            ("RESPONSE FORMAT", RESPONSE_FORMAT),
        ]

    def text(self) -> str:
        out = [PROMPT_HEADER]
        for name, body in self.blocks:
            out.append(f"## {name} ({len(body.encode('utf-8'))} bytes)")
            out.append(body)
        return "\n".join(out) + "\n"

    def serialize(self) -> bytes:
        return self.text().encode("utf-8")

    def images(self) -> List[Tuple[str, np.ndarray]]:
        return [("bev", self.bev.pixels)] + list(zip(VIEW_IDS, self.ego_views))

    def attachments(self) -> List[Tuple[str, bytes]]:
        return [(name, encode_png(img)) for name, img in self.images()]

    def digest(self) -> str:
        h = hashlib.sha256(self.serialize())
        for name, img in self.images():
            h.update(name.encode())
            h.update(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
        return h.hexdigest()


def render_state_block(topo_summary: str, alerts: Sequence[str]) -> str:
    lines = [topo_summary, f"safety_alerts ({len(alerts)}):"]
    lines += [f"- {escape_line(a)}" for a in alerts]
    return "\n".join(lines)


def render_views_block(bev: BevImage, ego_views: Sequence[np.ndarray]) -> str:
    lines = [
        f"bev: top-down metric map {bev.size}x{bev.size} px, "
        f"{bev.extent:.2f} m square, white=free black=occupied gray=unknown, "
        "yellow=trajectory blue=waypoints red=agent"
    ]
    for vid, name, img in zip(VIEW_IDS, VIEW_NAMES, ego_views):
        lines.append(f"{vid}: {name} camera {img.shape[1]}x{img.shape[0]} px")
    return "\n".join(lines)


def assemble_prompt(
    bev: BevImage,
    ego_views: Sequence[np.ndarray],
    plan: TaskPlan,
    topo_summary: str,
    history: HistoryLog,
    instruction: str,
    alerts: Sequence[str] = (),
) -> PromptBundle:
    """Build the prompt: plan, topological/physical state with alerts, the
    last ``history.window`` steps and the instruction, plus five images."""
    egos = tuple(annotate_grid(v) for v in ego_views)
    return PromptBundle(
        bev=bev,
        ego_views=egos,
        task_plan=plan.render(),
        state=render_state_block(topo_summary, alerts),
        history=history.render(),
        instruction=instruction,
        views=render_views_block(bev, egos),
    )
