from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metricnav.bev import (
    AGENT_COLOR,
    FREE,
    OCCUPIED,
    UNKNOWN,
    BevBoundsError,
    bev_pixel_to_world,
    render_bev,
)
from metricnav.geometry import AgentState
from metricnav.imaging import (
    GRID_COLOR,
    LABEL_COLOR,
    annotate_grid,
    decode_png,
    encode_png,
    grid_line_positions,
)
from metricnav.sim import Box, SceneSpec, render_rgbd
from metricnav.tsdf import TsdfVolume, integrate_frame

from conftest import FIXTURES


def test_grid_has_eleven_lines_each_way():
    xs, ys = grid_line_positions(128, 96)
    assert len(xs) == 11 and len(ys) == 11
    assert xs[0] == 0 and xs[-1] == 127 and ys[-1] == 95
    img = annotate_grid(np.zeros((96, 128, 3), np.uint8))
    for x in xs:
        col = img[:, x]
        assert np.mean(np.all(col == GRID_COLOR, axis=1)) > 0.8
    for y in ys:
        row = img[y, :]
        assert np.mean(np.all(row == GRID_COLOR, axis=1)) > 0.8


def test_annotation_idempotent_and_pure():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 255, (96, 128, 3), dtype=np.uint8)
    before = img.copy()
    once = annotate_grid(img)
    assert np.array_equal(img, before)
    assert np.array_equal(annotate_grid(once), once)


def test_annotation_draws_labels():
    img = annotate_grid(np.zeros((96, 128, 3), np.uint8))
    assert np.any(np.all(img == LABEL_COLOR, axis=2))


def test_annotation_rejects_empty():
    with pytest.raises(ValueError):
        annotate_grid(np.zeros((0, 5, 3), np.uint8))


def test_png_roundtrip():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 255, (20, 30, 3), dtype=np.uint8)
    assert np.array_equal(decode_png(encode_png(img)), img)


def test_golden_ego_annotation(box_room, intr, rig):
    agent = AgentState(0.3, -0.2, 0.4)
    frame = render_rgbd(box_room, agent.body_pose(), 0.0, intr, rig, 0.0, agent)
    golden = decode_png((FIXTURES / "golden" / "ego_box_room.png").read_bytes())
    assert np.array_equal(annotate_grid(frame.color), golden)


def test_golden_bev(fused_room):
    agent, vol, _ = fused_room
    bev = render_bev(vol, agent, [(-1, -1), (0.3, -0.2)], [(1.0, 1.0)])
    golden = decode_png((FIXTURES / "golden" / "bev_box_room.png").read_bytes())
    assert np.array_equal(bev.pixels, golden)


def test_bev_deterministic(fused_room):
    agent, vol, _ = fused_room
    a = render_bev(vol, agent, [(0, 0), (1, 1)], [(0.5, 0.5)])
    b = render_bev(vol, agent, [(0, 0), (1, 1)], [(0.5, 0.5)])
    assert encode_png(a.pixels) == encode_png(b.pixels)


def test_empty_volume_is_unknown():
    vol = TsdfVolume((-1, -1, 0), 0.1, (20, 20, 20))
    agent = AgentState(0.0, 0.0, 0.0)
    bev = render_bev(vol, agent)
    assert np.all(bev.classes == UNKNOWN)
    colors = {tuple(c) for c in bev.pixels.reshape(-1, 3)}
    assert colors <= {(128, 128, 128), GRID_COLOR, LABEL_COLOR, AGENT_COLOR}


def test_agent_arrow_at_center_points_plus_x():
    vol = TsdfVolume((-1, -1, 0), 0.1, (20, 20, 20))
    bev = render_bev(vol, AgentState(0.0, 0.0, 0.0))
    c = bev.size // 2
    assert tuple(bev.pixels[c, c]) == AGENT_COLOR
    red = np.all(bev.pixels == AGENT_COLOR, axis=2)
    rows, cols = np.nonzero(red)
    assert cols.max() - c > 8  # arrow extends to the right
    assert c - cols.min() <= 2
    assert abs(rows.mean() - c) < 1.0


def test_single_wall_band(intr, rig):
    scene = SceneSpec((Box((2.0, -3.0, 0.0), (2.2, 3.0, 2.5)),), ((-1.0, -3.0), (2.2, 3.0)))
    agent = AgentState(0.0, 0.0, 0.0)
    vol = TsdfVolume.from_bounds((-1.0, -2.0, -0.2), (3.0, 2.0, 2.6))
    for yaw in (0.0, 0.4, -0.4):
        integrate_frame(vol, render_rgbd(scene, agent.body_pose(), yaw, intr, rig, 0.0, agent), intr, rig)
    bev = render_bev(vol, agent)
    c, r = bev.world_to_pixel(2.02, 0.0)
    assert bev.classes[r, c] == OCCUPIED
    c2, r2 = bev.world_to_pixel(1.0, 0.0)
    assert bev.classes[r2, c2] == FREE
    c3, r3 = bev.world_to_pixel(1.0, 1.9)
    assert bev.classes[r3, c3] in (FREE, UNKNOWN)


def test_bev_pixel_to_world_anchors(fused_room):
    agent, vol, _ = fused_room
    bev = render_bev(vol, agent)
    assert np.allclose(bev_pixel_to_world(bev, (500, 500)), bev.center)
    assert np.allclose(bev_pixel_to_world(bev, (0, 0)), bev.world_origin)
    with pytest.raises(BevBoundsError):
        bev_pixel_to_world(bev, (1001, 0))
    with pytest.raises(BevBoundsError):
        bev_pixel_to_world(bev, (10, -1))


def test_bev_window_centered_on_agent():
    vol = TsdfVolume((-1, -1, 0), 0.1, (20, 20, 20))
    bev = render_bev(vol, AgentState(0.3, 0.2, 0.0), window=((0.3, 0.2), 4.0))
    assert np.allclose(bev_pixel_to_world(bev, (500, 500)), [0.3, 0.2])


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_world_pixel_roundtrip(fx, fy):
    vol = TsdfVolume((-1, -1, 0), 0.1, (20, 20, 20))
    bev = render_bev(vol, AgentState(0.0, 0.0, 0.0), window=((0.0, 0.0), 3.0))
    x = bev.world_origin[0] + fx * bev.extent
    y = bev.world_origin[1] - fy * bev.extent
    c, r = bev.world_to_pixel(x, y)
    back = bev.pixel_to_world(c, r)
    assert abs(back[0] - x) <= 0.5 * bev.meters_per_pixel + 1e-12
    assert abs(back[1] - y) <= 0.5 * bev.meters_per_pixel + 1e-12
    u, v = bev.world_to_normalized(x, y)
    assert np.allclose(bev_pixel_to_world(bev, (u, v)), [x, y], atol=1e-9)
