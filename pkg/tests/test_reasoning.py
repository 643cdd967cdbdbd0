from __future__ import annotations

import json
import math
import random
import string

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metricnav.bev import render_bev
from metricnav.geometry import AgentState
from metricnav.reasoning import (
    NO_HISTORY,
    ActionError,
    ActionParseError,
    ActionValidationError,
    CoverageError,
    GroundingError,
    HistoryEntry,
    HistoryLog,
    PlanItem,
    SpatialAction,
    TaskPlan,
    ViewSelectConfig,
    assemble_prompt,
    format_action,
    ground_action,
    parse_action,
    select_orthogonal_views,
)
from metricnav.sim import Box, SceneSpec, capture_rotation_scan
from metricnav.topo import LOOP_ALERT

from conftest import fuse_scan

MINIMAL = '{"thought": "head for the door", "action": {"type": "waypoint", "view": "ego_0", "u": 512, "v": 730}}'


# view selection


def test_exact_cardinals_from_fresh_scan(box_room, intr, rig):
    agent = AgentState(0.0, 0.0, 0.0)
    frames = capture_rotation_scan(box_room, agent, intr, rig)
    chosen = select_orthogonal_views(frames, agent)
    # clockwise order: front, right, back, left
    assert [round(math.degrees(f.camera_yaw)) for f in chosen] == [0, 270, 180, 90]


def test_nearest_heading_wins(box_room, intr, rig):
    frames = capture_rotation_scan(box_room, AgentState(0.0, 0.0, 0.0), intr, rig)
    chosen = select_orthogonal_views(frames, AgentState(0.0, 0.0, math.radians(30)))
    assert round(math.degrees(chosen[0].camera_yaw)) == 45


def test_coverage_error_when_far(box_room, intr, rig):
    frames = capture_rotation_scan(box_room, AgentState(0.0, 0.0, 0.0), intr, rig)
    with pytest.raises(CoverageError):
        select_orthogonal_views(frames, AgentState(1.0, 0.0, 0.0), ViewSelectConfig(delta_s=0.5))


def test_ties_go_to_most_recent(box_room, intr, rig):
    agent = AgentState(0.0, 0.0, 0.0)
    first = capture_rotation_scan(box_room, agent, intr, rig, 0.0)
    second = capture_rotation_scan(box_room, agent, intr, rig, 10.0)
    chosen = select_orthogonal_views(first + second, agent)
    assert all(f.timestamp >= 10.0 for f in chosen)


def test_view_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        ViewSelectConfig(delta_s=0.0)


@given(st.floats(-math.pi, math.pi))
def test_view_orthogonality(theta):
    from metricnav.geometry import angular_distance

    frames = _scan_frames()
    cfg = ViewSelectConfig()
    chosen = select_orthogonal_views(frames, AgentState(0.0, 0.0, theta), cfg)
    for f, target in zip(chosen, cfg.target_headings(theta)):
        assert angular_distance(f.heading, target) <= math.radians(22.5) + 1e-9


_SCAN = []


def _scan_frames():
    if not _SCAN:
        from metricnav.geometry import CameraIntrinsics, CameraRig

        scene = SceneSpec((), ((-3, -3), (3, 3)))
        _SCAN.extend(capture_rotation_scan(scene, AgentState(0.0, 0.0, 0.0), CameraIntrinsics(), CameraRig()))
    return _SCAN


# plan and prompt


def test_plan_update_rules():
    plan = TaskPlan.from_pairs([("Exit the room", False), ("Turn left", False)])
    revised = TaskPlan.from_pairs([("Exit the room", True), ("Find the stairs", False)])
    merged = plan.update(revised)
    assert merged.pairs() == [("Exit the room", True), ("Find the stairs", False)]
    # a done item survives even when the revision omits or un-ticks it
    again = merged.update(TaskPlan.from_pairs([("Exit the room", False)]))
    assert again.pairs() == [("Exit the room", True)]
    assert plan.update(None) is plan


plan_items = st.lists(st.tuples(st.sampled_from(["a", "b", "c", "d", "e"]), st.booleans()), max_size=6)


@given(plan_items, st.lists(plan_items, max_size=5))
def test_plan_monotonicity(start, revisions):
    plan = TaskPlan.from_pairs(start)
    for rev in revisions:
        before = {t for t, d in plan.pairs() if d}
        order = list(dict.fromkeys(t for t, _ in plan.pairs() if t in before))
        plan = plan.update(TaskPlan.from_pairs(rev))
        now = plan.pairs()
        assert before <= {t for t, d in now if d}
        assert list(dict.fromkeys(t for t, _ in now if t in before)) == order


def _bundle(fused_room, *, plan=None, history=None, instruction="go", alerts=(), summary="current_node: 0"):
    agent, volume, frames = fused_room
    bev = render_bev(volume, agent)
    egos = [f.color for f in select_orthogonal_views(frames, agent)]
    return assemble_prompt(bev, egos, plan or TaskPlan(), summary, history or HistoryLog(), instruction, alerts)


def test_initial_prompt(fused_room):
    b = _bundle(fused_room)
    text = b.text()
    assert "safety_alerts (0):" in text
    assert NO_HISTORY in text
    names = [name for name, _ in b.blocks]
    assert names[:4] == ["TASK PLAN", "STATE", "HISTORY", "INSTRUCTION"]
    assert len(b.ego_views) == 4 and len(b.attachments()) == 5


def test_history_window(fused_room):
    h = HistoryLog()
    for k in range(7):
        h.append(HistoryEntry(k, f"thought {k}", "ego_0", "waypoint(ego_0,500,800)", True))
    text = _bundle(fused_room, history=h).history
    assert [line.split(" |")[0] for line in text.splitlines()] == [f"step {k}" for k in range(2, 7)]


def test_alerts_in_state_block(fused_room):
    b = _bundle(fused_room, alerts=(LOOP_ALERT,))
    assert LOOP_ALERT in b.state
    assert b.text().index(LOOP_ALERT) < b.text().index("## HISTORY")


def test_prompt_determinism_and_injectivity(fused_room):
    a = _bundle(fused_room, instruction="walk")
    b = _bundle(fused_room, instruction="walk")
    assert a.serialize() == b.serialize() and a.digest() == b.digest()
    variants = [
        _bundle(fused_room, instruction="walk\n## STATE (3 bytes)"),
        _bundle(fused_room, instruction="walk", alerts=("x",)),
        _bundle(fused_room, instruction="walk", plan=TaskPlan.from_pairs([("walk", False)])),
        _bundle(fused_room, instruction="walk", summary="current_node: 1"),
    ]
    blobs = {v.serialize() for v in variants} | {a.serialize()}
    assert len(blobs) == 5


@given(st.text(max_size=30), st.text(max_size=30), st.text(max_size=30), st.text(max_size=30))
def test_serialization_injective_on_text_blocks(i1, i2, a1, a2):
    from metricnav.reasoning.prompt import PromptBundle

    bev = _tiny_bev()
    egos = tuple(np.zeros((4, 4, 3), np.uint8) for _ in range(4))

    def make(instr, alert):
        from metricnav.reasoning.prompt import render_state_block

        return PromptBundle(bev, egos, "(empty plan)", render_state_block("s", [alert]), NO_HISTORY, instr, "v")

    if (i1, a1) != (i2, a2):
        assert make(i1, a1).serialize() != make(i2, a2).serialize()


_BEV = []


def _tiny_bev():
    if not _BEV:
        from metricnav.tsdf import TsdfVolume

        vol = TsdfVolume.from_bounds((-1, -1, -0.3), (1, 1, 1.0))
        _BEV.append(render_bev(vol, AgentState(0, 0, 0), size=41))
    return _BEV[0]


# parsing


def test_minimal_waypoint():
    a = parse_action(MINIMAL)
    assert (a.kind, a.view, a.u, a.v) == ("waypoint", "ego_0", 512, 730)
    assert a.thought == "head for the door"


def test_out_of_range_u():
    with pytest.raises(ActionValidationError):
        parse_action('{"action": {"type": "waypoint", "view": "ego_0", "u": 1200, "v": 10}}')


def test_unknown_view():
    with pytest.raises(ActionValidationError):
        parse_action('{"action": {"type": "waypoint", "view": "ego_7", "u": 1, "v": 10}}')


def test_stop():
    a = parse_action('Done. {"thought": "here", "action": {"type": "stop"}}')
    assert a.kind == "stop" and a.view is None


def test_prose_and_fence_tolerated():
    a = parse_action("Sure!\n```json\n" + MINIMAL + "\n```\nGood luck {not json}")
    assert (a.u, a.v) == (512, 730)
    assert parse_action(MINIMAL.encode()) == a


def test_unparseable():
    with pytest.raises(ActionParseError):
        parse_action("I think we should go left.")


def test_todo_parsed_into_plan():
    raw = json.dumps({"todo": [{"text": "A", "done": True}, "B"], "action": {"type": "stop"}})
    assert parse_action(raw).updated_plan.pairs() == [("A", True), ("B", False)]


def test_format_roundtrip():
    a = SpatialAction("waypoint", "bev", 3, 999, "t", TaskPlan((PlanItem("x", True),)))
    assert parse_action(format_action(a)) == a


def test_parser_fuzz():
    rng = random.Random(1234)
    alphabet = string.printable + '{}[]":,'
    pieces = [MINIMAL, '{"action":', '"u":', "1e999", "NaN", "[" * 50, '{"type":"stop"}']
    for k in range(10_000):
        if k % 3 == 0:
            s = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
        elif k % 3 == 1:
            s = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 60)))
        else:
            base = rng.choice(pieces) + rng.choice(pieces)
            i = rng.randint(0, len(base))
            s = base[:i] + rng.choice(alphabet) + base[i + 1 :]
        try:
            parse_action(s)
        except ActionError:
            pass


# grounding


def _wall_setup(intr, rig):
    scene = SceneSpec((Box((2.0, -3.0, 0.0), (2.3, 3.0, 2.5)),), ((-3.0, -3.0), (2.3, 3.0)))
    agent = AgentState(0.0, 0.0, 0.0)
    volume, frames = fuse_scan(scene, agent, intr, rig)
    views = select_orthogonal_views(frames, agent)
    bev = render_bev(volume, agent, window=((0.0, 0.0), 8.0))
    return agent, volume, views, bev


def test_bev_center_is_agent(intr, rig):
    agent, volume, views, bev = _wall_setup(intr, rig)
    wp = ground_action(SpatialAction("waypoint", "bev", 500, 500), views, bev, volume, intr, rig, agent)
    assert np.allclose(wp.target[:2], [0.0, 0.0], atol=1e-9)
    assert wp.standoff == 0.0 and not wp.clamped


def test_ego_wall_two_metres_ahead(intr, rig):
    agent, volume, views, bev = _wall_setup(intr, rig)
    wp = ground_action(SpatialAction("waypoint", "ego_0", 500, 500), views, bev, volume, intr, rig, agent)
    assert wp.surface_point[0] == pytest.approx(2.0, abs=0.05)
    assert wp.target[0] == pytest.approx(2.0 - 1.5 * 0.18, abs=0.05)
    assert abs(wp.target[1]) < 0.05 and wp.target[2] == 0.0


def test_unknown_space(intr, rig):
    agent, volume, views, bev = _wall_setup(intr, rig)
    with pytest.raises(GroundingError):
        # looking backwards above the horizon sees nothing
        ground_action(SpatialAction("waypoint", "ego_2", 500, 0), views, bev, volume, intr, rig, agent)
    u, v = bev.world_to_normalized(2.5, 0.0)
    with pytest.raises(GroundingError):
        # behind the wall, never seen
        ground_action(SpatialAction("waypoint", "bev", round(u), round(v)), views, bev, volume, intr, rig, agent)


def test_horizon_clamp(intr, rig):
    agent, volume, views, bev = _wall_setup(intr, rig)
    u, v = bev.world_to_normalized(-3.5, 0.0)
    wp = ground_action(SpatialAction("waypoint", "bev", round(u), round(v)), views, bev, volume, intr, rig, agent)
    assert wp.clamped
    assert math.hypot(*wp.target[:2]) == pytest.approx(3.0)


def test_stop_cannot_be_grounded(intr, rig):
    agent, volume, views, bev = _wall_setup(intr, rig)
    with pytest.raises(GroundingError):
        ground_action(SpatialAction("stop"), views, bev, volume, intr, rig, agent)


@given(st.integers(0, 1000), st.integers(0, 1000), st.sampled_from(["bev", "ego_0", "ego_1", "ego_2", "ego_3"]))
def test_grounding_validity(u, v, view):
    from metricnav.bev import SLAB_HIGH
    from metricnav.geometry import CameraIntrinsics, CameraRig

    intr, rig = CameraIntrinsics(), CameraRig()
    if not _WALL:
        _WALL.append(_wall_setup(intr, rig))
    agent, volume, views, bev = _WALL[0]
    try:
        wp = ground_action(SpatialAction("waypoint", view, u, v), views, bev, volume, intr, rig, agent)
    except GroundingError:
        return
    assert math.hypot(*(wp.target[:2] - agent.xy)) <= 3.0 + 1e-9
    assert volume.column_observed(wp.target[0], wp.target[1], 0.0, SLAB_HIGH)


_WALL = []
