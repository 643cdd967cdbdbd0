from .base import (
    DECIDE,
    DECOMPOSE,
    BackendError,
    PlannerBackend,
    PlannerInputError,
    PlannerRequest,
    PlannerResponse,
    decompose_instruction,
    parse_plan,
)
from .greedy import GreedyBackend, GreedyConfig
from .remote import RemoteBackend, RemoteConfig
from .replay import RecordingBackend, ReplayBackend, ReplayMismatchError, request_digest
from .scripted import ScriptedBackend, ScriptedPolicy, ScriptError, load_script

__all__ = [
    "BackendError",
    "DECIDE",
    "DECOMPOSE",
    "GreedyBackend",
    "GreedyConfig",
    "PlannerBackend",
    "PlannerInputError",
    "PlannerRequest",
    "PlannerResponse",
    "RecordingBackend",
    "RemoteBackend",
    "RemoteConfig",
    "ReplayBackend",
    "ReplayMismatchError",
    "ScriptError",
    "ScriptedBackend",
    "ScriptedPolicy",
    "decompose_instruction",
    "load_script",
    "parse_plan",
    "request_digest",
]
