from .config import AgentConfig, ConfigError, RunConfig, config_from_dict, load_run_config
from .metrics import (
    MetricError,
    dedupe,
    densify,
    dtw,
    navigation_error,
    ndtw,
    oracle_success,
    spl,
    success,
    trajectory_length,
)
from .report import RunReport
from .runner import (
    FAILURE_CODES,
    EpisodeResult,
    Exchange,
    SuiteError,
    load_suite,
    run_episode,
    run_suite,
    score_trajectory,
)

__all__ = [
    "AgentConfig",
    "ConfigError",
    "EpisodeResult",
    "Exchange",
    "FAILURE_CODES",
    "MetricError",
    "RunConfig",
    "RunReport",
    "SuiteError",
    "config_from_dict",
    "dedupe",
    "densify",
    "dtw",
    "load_run_config",
    "load_suite",
    "navigation_error",
    "ndtw",
    "oracle_success",
    "run_episode",
    "run_suite",
    "score_trajectory",
    "spl",
    "success",
    "trajectory_length",
]
