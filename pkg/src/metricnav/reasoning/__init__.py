from .actions import (
    STOP,
    VALID_VIEWS,
    WAYPOINT,
    ActionError,
    ActionParseError,
    ActionValidationError,
    SpatialAction,
    format_action,
    parse_action,
)
from .grounding import GroundedWaypoint, GroundingConfig, GroundingError, ego_ray, ground_action
from .prompt import (
    NO_HISTORY,
    PROMPT_HEADER,
    HistoryEntry,
    HistoryLog,
    PlanItem,
    PromptBundle,
    TaskPlan,
    assemble_prompt,
)
from .views import VIEW_IDS, VIEW_NAMES, CoverageError, ViewSelectConfig, select_orthogonal_views

__all__ = [
    "ActionError",
    "ActionParseError",
    "ActionValidationError",
    "CoverageError",
    "GroundedWaypoint",
    "GroundingConfig",
    "GroundingError",
    "HistoryEntry",
    "HistoryLog",
    "NO_HISTORY",
    "PROMPT_HEADER",
    "PlanItem",
    "PromptBundle",
    "STOP",
    "SpatialAction",
    "TaskPlan",
    "VALID_VIEWS",
    "VIEW_IDS",
    "VIEW_NAMES",
    "ViewSelectConfig",
    "WAYPOINT",
    "assemble_prompt",
    "ego_ray",
    "format_action",
    "ground_action",
    "parse_action",
    "select_orthogonal_views",
]
