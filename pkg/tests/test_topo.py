from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from metricnav.topo import (
    LOOP_ALERT,
    MemoryConfig,
    TopoError,
    TopoGraph,
    VerticalStatus,
    detect_loop,
    dump_graph,
    load_graph,
    observe_pose,
    state_summary,
    vertical_status,
)


def walk(points, config=MemoryConfig()):
    g = TopoGraph()
    for x, y in points:
        observe_pose(g, (x, y, 0.0), config)
    return g


def test_bootstrap():
    g, nid, created = observe_pose(TopoGraph(), (0.0, 0.0, 0.0))
    assert (nid, created) == (0, True)
    assert g.nodes[0].visit_count == 1


def test_merge_inside_threshold():
    g = walk([(0.0, 0.0), (3.0, 0.0), (0.5, 0.0)])
    assert len(g) == 2
    assert g.current_node == 0
    assert g.nodes[0].visit_count == 2
    assert g.nodes[0].position == (0.0, 0.0)  # nodes never move


def test_new_node_beyond_threshold():
    g = walk([(0.0, 0.0), (0.9, 0.0)])
    assert len(g) == 2
    assert g.has_edge(0, 1) and g.has_edge(1, 0)


def test_staying_put_does_not_count():
    g = walk([(0.0, 0.0)] * 10)
    assert g.nodes[0].visit_count == 1
    assert detect_loop(g) is None


def test_loop_threshold_is_strict():
    cfg = MemoryConfig(tau_loop=3)
    g = walk([(0, 0), (2, 0), (0, 0), (2, 0), (0, 0)], cfg)
    assert g.nodes[0].visit_count == 3
    assert detect_loop(g, cfg) is None
    observe_pose(g, (2, 0, 0), cfg)
    observe_pose(g, (0, 0, 0), cfg)
    assert g.nodes[0].visit_count == 4
    assert detect_loop(g, cfg) == LOOP_ALERT == "CRITICAL: Potential Loop Detected"


def test_vertical_status():
    assert vertical_status(0.5, 0.0) is VerticalStatus.UPSTAIRS
    assert vertical_status(-0.5, 0.0) is VerticalStatus.DOWNSTAIRS
    assert vertical_status(0.0, 0.0) is VerticalStatus.LEVEL
    assert vertical_status(0.3, 0.0) is VerticalStatus.LEVEL


def test_summary_minimal_and_looped():
    g = walk([(0.0, 0.0)])
    s = state_summary(g)
    assert "current_node: 0" in s and "visit_count: 1" in s and "neighbors: 0" in s
    assert "loop_alert: none" in s
    looped = walk([(0, 0), (2, 0)] * 4 + [(0, 0)])
    assert LOOP_ALERT in state_summary(looped)
    assert state_summary(looped) == state_summary(walk([(0, 0), (2, 0)] * 4 + [(0, 0)]))


def test_config_validation():
    with pytest.raises(TopoError):
        MemoryConfig(delta_merge=0.0)
    with pytest.raises(TopoError):
        observe_pose(TopoGraph(), (math.nan, 0.0, 0.0))


def test_dump_load_roundtrip(tmp_path):
    g = walk([(0, 0), (2, 0), (2, 2), (0, 0), (0.3, 2.1)])
    text = dump_graph(g)
    back = load_graph(text.splitlines())
    assert dump_graph(back) == text
    p = tmp_path / "g.txt"
    p.write_text(text)
    assert dump_graph(load_graph(p)) == text


points = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=40)


@given(points)
def test_graph_invariants(pts):
    cfg = MemoryConfig()
    g = TopoGraph()
    arrivals = 0
    prev = None
    alerted = set()
    for x, y in pts:
        _, nid, created = observe_pose(g, (x, y, 0.0), cfg)
        if created or nid != prev:
            arrivals += 1
        prev = nid
        for n in list(alerted):
            g_cur = g.nodes[n].visit_count
            assert g_cur > cfg.tau_loop
        if g.nodes[nid].visit_count > cfg.tau_loop:
            alerted.add(nid)
    # separation: nodes were created at least delta_merge apart and never move
    ids = sorted(g.nodes)
    for i in ids:
        for j in ids:
            if i < j:
                assert math.dist(g.nodes[i].position, g.nodes[j].position) >= cfg.delta_merge
    assert sum(n.visit_count for n in g.nodes.values()) == arrivals
    for a in ids:
        for b in g.neighbors(a):
            assert a in g.neighbors(b)
