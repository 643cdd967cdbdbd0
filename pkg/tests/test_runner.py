from __future__ import annotations


import pytest

from metricnav.evaluation import AgentConfig, RunReport, load_suite, run_episode, run_suite
from metricnav.evaluation.runner import FAIL_BACKEND, FAIL_MAX_STEPS, FAIL_NONE, FAIL_STUCK
from metricnav.planners import BackendError, PlannerBackend, ScriptedBackend
from metricnav.sim import load_episode, load_scene, resolve_scene_path
from metricnav.topo import LOOP_ALERT

from episodes import GARBAGE, box_episode, text_backend, world_backend


def test_straight_corridor(fixtures_dir, tmp_path):
    path = fixtures_dir / "episodes" / "sc_straight.toml"
    ep = load_episode(path)
    scene = load_scene(resolve_scene_path(ep, path))
    r = run_episode(ep, ScriptedBackend(), AgentConfig(), scene, path.parent, tmp_path)
    assert r.success and r.ne < 0.5
    assert r.failure_code == FAIL_NONE
    assert (tmp_path / "trajectory.txt").exists()
    assert (tmp_path / "step_000" / "prompt_0.txt").exists()
    assert (tmp_path / "step_000" / "bev.png").exists()
    # text-form ego selections, as written by hand in the script
    assert r.exchanges[0].response.startswith('{"thought": "The corridor is clear ahead')
    # arrival after the second move ends the episode before the scripted stop
    assert r.steps == 2
    assert r.plan.pairs() == [("Walk down the corridor", True), ("Stop after five meters", False)]


def test_never_stopping_hits_cap(box_room):
    ep = box_episode(max_steps=5)
    backend = world_backend([(-1.0, 1.0), (-1.0, -1.0)], cycle=True)
    r = run_episode(ep, backend, AgentConfig(), box_room)
    assert r.failure_code == FAIL_MAX_STEPS and r.steps == 5
    # one decide per step plus the initial decomposition
    assert r.backend_calls == 5 + 1


def test_config_step_cap_overrides_episode(box_room):
    ep = box_episode(max_steps=20)
    r = run_episode(ep, world_backend([(-1.0, 1.0), (-1.0, -1.0)], cycle=True), AgentConfig(max_steps=3), box_room)
    assert r.steps == 3 and r.failure_code == FAIL_MAX_STEPS


def test_oscillation_raises_loop_alert(box_room):
    ep = box_episode(max_steps=8)
    r = run_episode(ep, world_backend([(1.0, 0.0), (-1.0, 0.0)], cycle=True), AgentConfig(), box_room)
    prompts = {x.step: x.prompt for x in r.exchanges if x.attempt == 0}
    # start node visited at steps 0, 2, 4, 6; the fourth visit crosses tau_loop=3
    assert all(LOOP_ALERT not in prompts[k] for k in range(6))
    assert LOOP_ALERT in prompts[6]
    state = prompts[6].split("## STATE")[1].split("## HISTORY")[0]
    assert LOOP_ALERT in state


def test_malformed_responses_fall_back_to_probe(box_room):
    ep = box_episode(start=(-1.0, 0.0, 0.0), max_steps=2)
    r = run_episode(ep, text_backend([GARBAGE], cycle=True), AgentConfig(), box_room)
    step0 = [x for x in r.exchanges if x.step == 0]
    assert [x.attempt for x in step0] == [0, 1, 2]
    assert all(x.outcome == "invalid" for x in step0)
    assert "ACTION FAILED" in step0[1].prompt and "ACTION FAILED" not in step0[0].prompt
    assert r.failure_code == FAIL_MAX_STEPS
    assert r.backend_calls == 1 + 2 * 3
    # two probes of 0.5 m straight ahead
    assert r.final == pytest.approx((0.0, 0.0, 0.0), abs=1e-9)


def test_ungrounded_selection_retried(box_room):
    bad = '{"action": {"type": "waypoint", "view": "ego_2", "u": 500, "v": 0}}'
    stop = '{"action": {"type": "stop"}}'
    ep = box_episode()
    from metricnav.planners import ScriptedPolicy
    from metricnav.planners.scripted import ScriptEntry

    policy = ScriptedPolicy({(0, 0): ScriptEntry(0, 0, text=bad), (0, 1): ScriptEntry(0, 1, text=stop)})
    r = run_episode(ep, ScriptedBackend(policy), AgentConfig(), box_room)
    assert [x.outcome for x in r.exchanges] in (["ungrounded", "ok"], ["ok"])
    assert r.failure_code == FAIL_NONE


def test_stuck_detection(box_room):
    ep = box_episode(start=(0.0, 0.0, 0.0))
    r = run_episode(ep, world_backend([(0.0, 0.0)], cycle=True), AgentConfig(), box_room)
    assert r.failure_code == FAIL_STUCK and r.steps == 3


class _Broken(PlannerBackend):
    backend_id = "broken"

    def __init__(self, fail_decompose=False):
        super().__init__()
        self.fail_decompose = fail_decompose

    def _decide(self, request):
        raise BackendError("service down")

    def decompose(self, instruction, request):
        if self.fail_decompose:
            raise BackendError("service down")
        from metricnav.reasoning import TaskPlan

        return TaskPlan.from_pairs([("x", False)])


@pytest.mark.parametrize("fail_decompose", [False, True])
def test_backend_failure_code(box_room, fail_decompose):
    r = run_episode(box_episode(), _Broken(fail_decompose), AgentConfig(), box_room)
    assert r.failure_code == FAIL_BACKEND
    assert len(r.trajectory) == 1 and not r.success


def test_arrival_ends_episode(box_room):
    ep = box_episode(start=(-1.0, 0.0, 0.0), goal=(1.0, 0.0))
    r = run_episode(ep, world_backend([(1.0, 0.0), (-1.0, 0.0)], cycle=True), AgentConfig(), box_room)
    assert r.failure_code == FAIL_NONE and r.steps == 1 and r.ne <= 0.3


def test_suite_report_and_aggregates(fixtures_dir, tmp_path):
    suite = load_suite(fixtures_dir / "suite.toml")[:3]
    results = run_suite(suite, lambda _id: ScriptedBackend(), AgentConfig(), tmp_path)
    report = RunReport.build(results, "digest", "scripted")
    d = report.to_dict()
    assert d["aggregate"]["sr"] == pytest.approx(sum(r.success for r in results) / 3)
    assert d["aggregate"]["ne"] == pytest.approx(sum(r.ne for r in results) / 3)
    ids = [e["episode_id"] for e in d["results"]]
    assert ids == sorted(ids)
    report.write(tmp_path)
    assert (tmp_path / "report.json").read_text() == report.to_json()
    assert "SR" in (tmp_path / "summary.txt").read_text()
