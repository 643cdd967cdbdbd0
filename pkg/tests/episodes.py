"""In-memory episodes and scripted policies for loop-level tests."""

from __future__ import annotations

from metricnav.geometry import AgentState
from metricnav.planners import ScriptedBackend, ScriptedPolicy
from metricnav.planners.scripted import ScriptEntry

GARBAGE = "I would go left, probably."


def box_episode(start=(-1.0, 0.0, 0.0), goal=(1.5, 1.8), max_steps=20, ep_id="box"):
    from metricnav.sim import EpisodeSpec

    return EpisodeSpec(
        id=ep_id,
        scene_path="box_room.scene",
        start=AgentState(*start),
        goal=goal,
        instruction="Wander around the room.",
        shortest_path_length=max(1e-6, ((goal[0] - start[0]) ** 2 + (goal[1] - start[1]) ** 2) ** 0.5),
        reference_path=((start[0], start[1]), goal),
        max_steps=max_steps,
    )


def world_backend(points, cycle=False, plan=("Wander",)):
    entries = {(k, 0): ScriptEntry(k, 0, world=tuple(p)) for k, p in enumerate(points)}
    return ScriptedBackend(ScriptedPolicy(entries, plan=tuple(plan), cycle=cycle))


def text_backend(texts, cycle=False):
    entries = {(k, 0): ScriptEntry(k, 0, text=t) for k, t in enumerate(texts)}
    return ScriptedBackend(ScriptedPolicy(entries, plan=("Wander",), cycle=cycle))
