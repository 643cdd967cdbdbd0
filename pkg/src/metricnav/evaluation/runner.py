"""Closed-loop episode execution: perceive, remember, prompt, decide, ground, act."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import tomli

from ..bev import render_bev
from ..geometry import AgentState
from ..imaging import save_png
from ..planners.base import DECOMPOSE, BackendError, PlannerBackend, PlannerRequest, decompose_instruction
from ..reasoning.actions import STOP, ActionError, SpatialAction, parse_action
from ..reasoning.grounding import GroundingError, ground_action
from ..reasoning.prompt import HistoryEntry, HistoryLog, PromptBundle, TaskPlan, assemble_prompt
from ..reasoning.views import select_orthogonal_views
from ..sim.controller import execute_waypoint, write_trajectory
from ..sim.render import SCAN_INTERVAL, capture_rotation_scan
from ..sim.scene import EpisodeSpec, SceneSpec, load_episode, load_scene, resolve_scene_path
from ..topo import TopoGraph, detect_loop, dump_graph, observe_pose, state_summary
from ..tsdf import TsdfVolume, integrate_frame
from . import metrics
from .config import AgentConfig

SUITE_FORMAT = "metricnav-suite"
SUITE_VERSION = 1

FAIL_NONE = "none"
FAIL_MAX_STEPS = "max-steps"
FAIL_BACKEND = "backend-error"
FAIL_STUCK = "stuck"
FAILURE_CODES = (FAIL_NONE, FAIL_MAX_STEPS, FAIL_BACKEND, FAIL_STUCK)


class SuiteError(ValueError):
    pass


def alert_invalid_response(detail: str) -> str:
    return f"ACTION FAILED: previous response was invalid ({detail}). Reply with the documented JSON schema."


def alert_ungrounded(detail: str) -> str:
    return f"ACTION FAILED: the selected point could not be grounded ({detail}). Pick a mapped, visible location."


def alert_blocked(moved: float) -> str:
    return f"ACTION FAILED: the path was blocked after {moved:.2f} m. Choose a different waypoint."


def alert_horizon(d_max: float) -> str:
    return f"HORIZON EXCEEDED: the waypoint was beyond {d_max:.1f} m and was clamped to the horizon."


@dataclass(frozen=True)
class Exchange:
    """One backend round trip as seen by the loop."""

    step: int
    attempt: int
    prompt: str
    response: str
    outcome: str


@dataclass
class EpisodeResult:
    episode_id: str
    success: bool
    ne: float
    tl: float
    osr: bool
    spl: float
    ndtw: float
    steps: int
    failure_code: str
    final: Tuple[float, float, float]
    backend_calls: int = 0
    trajectory: List[AgentState] = field(default_factory=list, repr=False)
    exchanges: List[Exchange] = field(default_factory=list, repr=False)
    plan: Optional[TaskPlan] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "success": self.success,
            "ne": self.ne,
            "tl": self.tl,
            "osr": self.osr,
            "spl": self.spl,
            "ndtw": self.ndtw,
            "steps": self.steps,
            "failure_code": self.failure_code,
            "final": list(self.final),
            "backend_calls": self.backend_calls,
        }


def score_trajectory(
    trajectory: Sequence[AgentState],
    episode: EpisodeSpec,
    steps: int,
    failure_code: str,
    step_size: float = 0.1,
) -> EpisodeResult:
    """Metrics from a micro-step trajectory alone."""
    pts = metrics.dedupe([(s.x, s.y) for s in trajectory])
    final = trajectory[-1]
    ne = metrics.navigation_error((final.x, final.y), episode.goal)
    ok = ne <= episode.success_radius
    tl = metrics.trajectory_length(pts)
    ref = metrics.densify(episode.reference_path, step_size)
    return EpisodeResult(
        episode_id=episode.id,
        success=ok,
        ne=ne,
        tl=tl,
        osr=metrics.oracle_success(pts, episode.goal, episode.success_radius),
        spl=metrics.spl(ok, episode.shortest_path_length, tl),
        ndtw=metrics.ndtw(pts, ref, episode.success_radius),
        steps=steps,
        failure_code=failure_code,
        final=(final.x, final.y, final.theta),
        trajectory=list(trajectory),
    )


def make_volume(scene: SceneSpec, config: AgentConfig) -> TsdfVolume:
    (x0, y0), (x1, y1) = scene.bounds
    m, f = config.map_margin, scene.floor_height
    return TsdfVolume.from_bounds((x0 - m, y0 - m, f - m), (x1 + m, y1 + m, f + config.map_height), config.voxel_size)


class _Artifacts:
    def __init__(self, root: Optional[Path]) -> None:
        self.root = root
        if root is not None:
            root.mkdir(parents=True, exist_ok=True)

    def step_dir(self, step: int) -> Optional[Path]:
        if self.root is None:
            return None
        d = self.root / f"step_{step:03d}"
        d.mkdir(exist_ok=True)
        return d

    def exchange(self, step: int, attempt: int, prompt: PromptBundle, raw: str) -> None:
        d = self.step_dir(step)
        if d is None:
            return
        (d / f"prompt_{attempt}.txt").write_bytes(prompt.serialize())
        (d / f"response_{attempt}.txt").write_bytes(raw.encode("utf-8"))
        if attempt == 0:
            save_png(prompt.bev.pixels, d / "bev.png")
            for k, img in enumerate(prompt.ego_views):
                save_png(img, d / f"ego_{k}.png")

    def finish(self, trajectory: Sequence[AgentState], graph: TopoGraph) -> None:
        if self.root is None:
            return
        write_trajectory(trajectory, self.root / "trajectory.txt")
        if graph.nodes:
            (self.root / "topo_graph.txt").write_text(dump_graph(graph), encoding="utf-8")


def run_episode(
    episode: EpisodeSpec,
    backend: PlannerBackend,
    config: AgentConfig = AgentConfig(),
    scene: Optional[SceneSpec] = None,
    episode_dir: Optional[Path] = None,
    artifacts_dir: Optional[Union[str, Path]] = None,
) -> EpisodeResult:
    """Run one episode to termination and score it.

    Each reasoning step: 8-view rotation scan fused into the TSDF, topological
    update and loop check, orthogonal view selection, BEV render, prompt
    assembly, one backend decision (plus bounded retries on unusable
    responses), grounding and execution. Ends on a stop action, arrival
    within ``arrival_radius``, the step cap, a stuck agent or a backend failure.
    """
    if scene is None:
        if episode_dir is None:
            raise ValueError("run_episode needs a scene or the episode directory to resolve it")
        scene = load_scene(resolve_scene_path(episode, Path(episode_dir) / "episode.toml"))
    floor = scene.floor_height
    intr, rig = config.intrinsics, config.rig
    max_steps = config.max_steps or episode.max_steps
    art = _Artifacts(Path(artifacts_dir) if artifacts_dir is not None else None)

    state = episode.start
    volume = make_volume(scene, config)
    graph = TopoGraph()
    frames = []
    trajectory = [state]
    trail: List[Tuple[float, float]] = [(state.x, state.y)]
    waypoints: List[Tuple[float, float]] = []
    history = HistoryLog(window=config.history_window)
    plan = TaskPlan()
    pending: List[str] = []
    exchanges: List[Exchange] = []
    moves: List[float] = []
    clock = 0.0
    calls = 0
    failure = FAIL_MAX_STEPS
    steps = 0

    try:
        backend.begin_episode(episode, episode_dir)
    except BackendError:
        return _finish(trajectory, episode, 0, FAIL_BACKEND, calls, exchanges, plan, art, graph, config)

    for step in range(max_steps):
        steps = step + 1
        scan = capture_rotation_scan(scene, state, intr, rig, t0=clock)
        clock += len(scan) * SCAN_INTERVAL
        for f in scan:
            integrate_frame(volume, f, intr, rig)
        frames.extend(scan)
        observe_pose(graph, (state.x, state.y, floor), config.memory)
        views = select_orthogonal_views(frames, state, config.views)
        bev = render_bev(volume, state, trail, waypoints, floor, config.bev_size)
        ego = [f.color for f in views]
        summary = state_summary(graph, config.memory)

        alerts = list(pending)
        loop = detect_loop(graph, config.memory)
        if loop:
            alerts.insert(0, loop)
        pending = []

        if step == 0:
            prompt0 = assemble_prompt(bev, ego, plan, summary, history, episode.instruction, alerts)
            try:
                calls += 1
                plan = decompose_instruction(backend, episode.instruction, PlannerRequest(prompt0, 0, episode.id, 0, DECOMPOSE))
            except BackendError:
                failure = FAIL_BACKEND
                break

        action: Optional[SpatialAction] = None
        grounded = None
        for attempt in range(config.max_retries + 1):
            prompt = assemble_prompt(bev, ego, plan, summary, history, episode.instruction, alerts)
            try:
                calls += 1
                raw = backend.decide(PlannerRequest(prompt, step, episode.id, attempt)).raw
            except BackendError:
                failure = FAIL_BACKEND
                break
            art.exchange(step, attempt, prompt, raw)
            try:
                candidate = parse_action(raw)
                if candidate.kind != STOP:
                    grounded = ground_action(candidate, views, bev, volume, intr, rig, state, floor, config.grounding)
                action = candidate
                exchanges.append(Exchange(step, attempt, prompt.text(), raw, "ok"))
                break
            except ActionError as exc:
                alerts = alerts + [alert_invalid_response(str(exc))]
                exchanges.append(Exchange(step, attempt, prompt.text(), raw, "invalid"))
            except GroundingError as exc:
                alerts = alerts + [alert_ungrounded(str(exc))]
                exchanges.append(Exchange(step, attempt, prompt.text(), raw, "ungrounded"))
        if failure == FAIL_BACKEND:
            break

        if action is None:
            # retries exhausted: short forward probe keeps the loop alive
            dist = config.probe_distance
            target = (state.x + dist * math.cos(state.theta), state.y + dist * math.sin(state.theta))
            thought, view, desc = "", "probe", f"probe({dist:.2f})"
            clamped = False
        else:
            plan = plan.update(action.updated_plan)
            thought, view, desc = action.thought, action.view or "-", action.describe()
            if action.kind == STOP:
                history.append(HistoryEntry(step, thought, "-", desc, True))
                failure = FAIL_NONE
                break
            target = (float(grounded.target[0]), float(grounded.target[1]))
            clamped = grounded.clamped

        before = state
        state, reached, path = execute_waypoint(scene, state, target, config.controller)
        trajectory.extend(path[1:])
        trail.extend((s.x, s.y) for s in path[1:] if (s.x, s.y) != trail[-1])
        waypoints.append(target)
        moved = math.hypot(state.x - before.x, state.y - before.y)
        if not reached:
            pending.append(alert_blocked(moved))
        if clamped:
            pending.append(alert_horizon(config.controller.d_max))
        history.append(HistoryEntry(step, thought, view, desc, reached))

        if metrics.navigation_error((state.x, state.y), episode.goal) <= config.arrival_radius:
            failure = FAIL_NONE
            break
        moves.append(moved)
        if len(moves) >= config.stuck_steps and all(m < config.stuck_distance for m in moves[-config.stuck_steps:]):
            failure = FAIL_STUCK
            break

    return _finish(trajectory, episode, steps, failure, calls, exchanges, plan, art, graph, config)


def _finish(trajectory, episode, steps, failure, calls, exchanges, plan, art, graph, config) -> EpisodeResult:
    result = score_trajectory(trajectory, episode, steps, failure, config.controller.step_size)
    result.backend_calls = calls
    result.exchanges = exchanges
    result.plan = plan
    art.finish(trajectory, graph)
    return result


def load_suite(path: Union[str, Path]) -> List[Tuple[EpisodeSpec, Path]]:
    """Episodes listed by a suite file, as (EpisodeSpec, episode file path), in file order.

    Suite file::

        format = "metricnav-suite"
        version = 1
        name = "synthetic"
        episodes = ["episodes/ep01.toml", ...]   # relative to the suite file
    """
    path = Path(path)
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SuiteError(f"{path}: cannot read ({exc.strerror})") from exc
    except tomli.TOMLDecodeError as exc:
        raise SuiteError(f"{path}: {exc}") from exc
    if data.get("format") != SUITE_FORMAT or data.get("version") != SUITE_VERSION:
        raise SuiteError(f"{path}: expected format {SUITE_FORMAT!r} version {SUITE_VERSION}")
    eps = data.get("episodes")
    if not isinstance(eps, list) or not eps or not all(isinstance(e, str) for e in eps):
        raise SuiteError(f"{path}: 'episodes' must be a nonempty list of paths")
    out = []
    seen = set()
    for rel in eps:
        p = path.parent / rel
        ep = load_episode(p)
        if ep.id in seen:
            raise SuiteError(f"{path}: duplicate episode id {ep.id!r}")
        seen.add(ep.id)
        out.append((ep, p))
    return out


def run_suite(
    suite: Sequence[Tuple[EpisodeSpec, Path]],
    backend_factory,
    config: AgentConfig = AgentConfig(),
    output_dir: Optional[Union[str, Path]] = None,
) -> List[EpisodeResult]:
    """Run each episode with a fresh backend from ``backend_factory(episode_id)``."""
    results = []
    for ep, ep_path in suite:
        scene = load_scene(resolve_scene_path(ep, ep_path))
        art = Path(output_dir) / ep.id if output_dir is not None else None
        backend = backend_factory(ep.id)
        results.append(run_episode(ep, backend, config, scene, ep_path.parent, art))
    return results
