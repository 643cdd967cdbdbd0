from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from metricnav.geometry import AgentState, CameraIntrinsics, CameraRig
from metricnav.sim import capture_rotation_scan, load_scene
from metricnav.tsdf import TsdfVolume, integrate_frame

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# filled by the acceptance tests, printed at the end of the session
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def box_room():
    return load_scene(FIXTURES / "scenes" / "box_room.scene")


@pytest.fixture(scope="session")
def intr():
    return CameraIntrinsics()


@pytest.fixture(scope="session")
def rig():
    return CameraRig()


def fuse_scan(scene, agent, intr, rig, volume=None):
    if volume is None:
        (x0, y0), (x1, y1) = scene.bounds
        volume = TsdfVolume.from_bounds((x0 - 0.3, y0 - 0.3, -0.3), (x1 + 0.3, y1 + 0.3, 2.7))
    frames = capture_rotation_scan(scene, agent, intr, rig)
    for f in frames:
        integrate_frame(volume, f, intr, rig)
    return volume, frames


@pytest.fixture(scope="session")
def fused_room(box_room, intr, rig):
    """Box room fused from one 8-view scan at a slightly off-center pose."""
    agent = AgentState(0.3, -0.2, 0.4)
    volume, frames = fuse_scan(box_room, agent, intr, rig)
    return agent, volume, frames
