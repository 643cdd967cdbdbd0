"""Uniform decision interface shared by every planner backend."""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass
from typing import Optional

from ..reasoning.actions import ActionError, find_object, plan_from_todo
from ..reasoning.prompt import PromptBundle, TaskPlan

DECIDE = "decide"
DECOMPOSE = "decompose"


class BackendError(RuntimeError):
    """Transport or service failure after the retry budget is spent."""


class PlannerInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PlannerRequest:
    prompt: PromptBundle
    step: int
    episode_id: str
    attempt: int = 0
    kind: str = DECIDE

    def __post_init__(self) -> None:
        if self.step < 0 or self.attempt < 0:
            raise PlannerInputError("step and attempt must be non-negative")
        if self.kind not in (DECIDE, DECOMPOSE):
            raise PlannerInputError(f"unknown request kind {self.kind!r}")

    @property
    def key(self):
        return (self.kind, self.step, self.attempt)


@dataclass(frozen=True)
class PlannerResponse:
    raw: str
    latency: float
    backend_id: str

    def __post_init__(self) -> None:
        if not self.raw:
            raise PlannerInputError("planner response text is empty")


class PlannerBackend(abc.ABC):
    """Stateful per-episode decision maker.

    ``begin_episode`` resets per-episode state; requests within an episode
    must arrive with strictly increasing (step, attempt) keys.
    """

    backend_id = "abstract"

    def __init__(self) -> None:
        self._episode: Optional[str] = None
        self._last = None

    def begin_episode(self, episode, episode_dir=None) -> None:
        """Reset per-episode state. ``episode_dir`` resolves relative fixture paths."""
        self._episode = episode.id
        self._last = None

    def _check_order(self, request: PlannerRequest) -> None:
        if request.kind != DECIDE:
            return
        key = (request.step, request.attempt)
        if self._last is not None and key <= self._last:
            raise PlannerInputError(f"request {key} does not advance past {self._last}")
        self._last = key

    def decide(self, request: PlannerRequest) -> PlannerResponse:
        self._check_order(request)
        return self._decide(request)

    @abc.abstractmethod
    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        ...

    @abc.abstractmethod
    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        ...


def decompose_instruction(backend: PlannerBackend, instruction: str, request: PlannerRequest) -> TaskPlan:
    """Initial checklist for an instruction, produced by the backend."""
    if not instruction or not instruction.strip():
        raise PlannerInputError("instruction is empty")
    return backend.decompose(instruction, request)


def parse_plan(raw: str) -> TaskPlan:
    """Read the ``todo`` list out of a decomposition response."""
    try:
        obj = find_object(raw)
        plan = plan_from_todo(obj.get("todo"))
    except ActionError as exc:
        raise BackendError(f"decomposition response unusable: {exc}") from exc
    if plan is None or not plan.items:
        raise BackendError("decomposition response has no todo items")
    return plan


def plan_response(plan: TaskPlan, thought: str = "") -> str:
    return json.dumps({"thought": thought, "todo": [{"text": i.text, "done": i.done} for i in plan.items]})
