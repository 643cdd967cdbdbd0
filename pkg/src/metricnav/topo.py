"""Topological memory: spatially clustered nodes with visit counts.

Nodes are frozen where they are created. Arriving within ``delta_merge`` of an
existing node re-uses it; a visit is counted only when the agent arrives from
a different node, so dwelling or rotating in place never inflates the count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

LOOP_ALERT = "CRITICAL: Potential Loop Detected"
GRAPH_FORMAT_HEADER = "# metricnav topo-graph v1"


class TopoError(ValueError):
    pass


@dataclass(frozen=True)
class MemoryConfig:
    delta_merge: float = 0.8
    tau_loop: int = 3
    delta_h: float = 0.3

    def __post_init__(self) -> None:
        if self.delta_merge <= 0 or self.tau_loop <= 0 or self.delta_h <= 0:
            raise TopoError("memory thresholds must be positive")


@dataclass
class TopoNode:
    id: int
    position: Tuple[float, float]
    visit_count: int = 1
    floor_height: float = 0.0


class VerticalStatus(str, enum.Enum):
    LEVEL = "level"
    UPSTAIRS = "upstairs"
    DOWNSTAIRS = "downstairs"


@dataclass
class TopoGraph:
    nodes: Dict[int, TopoNode] = field(default_factory=dict)
    edges: Set[Tuple[int, int]] = field(default_factory=set)
    current_node: Optional[int] = None
    height_now: float = 0.0
    height_prev: Optional[float] = None

    def __len__(self) -> int:
        return len(self.nodes)

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            return
        if a not in self.nodes or b not in self.nodes:
            raise TopoError(f"edge ({a}, {b}) references a missing node")
        self.edges.add((min(a, b), max(a, b)))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def neighbors(self, node_id: int) -> List[int]:
        out = []
        for a, b in self.edges:
            if a == node_id:
                out.append(b)
            elif b == node_id:
                out.append(a)
        return sorted(out)

    def nearest(self, x: float, y: float) -> Tuple[Optional[int], float]:
        best, best_d = None, math.inf
        for nid in sorted(self.nodes):
            px, py = self.nodes[nid].position
            d = math.hypot(x - px, y - py)
            if d < best_d:
                best, best_d = nid, d
        return best, best_d

    @property
    def current(self) -> TopoNode:
        if self.current_node is None:
            raise TopoError("graph is empty")
        return self.nodes[self.current_node]


def observe_pose(
    graph: TopoGraph,
    pose: Tuple[float, float, float],
    config: MemoryConfig = MemoryConfig(),
) -> Tuple[TopoGraph, int, bool]:
    """Cluster a new pose into the graph (mutated in place).

    Returns ``(graph, node_id, newly_created)``.
    """
    x, y, h = (float(c) for c in pose)
    if not all(math.isfinite(c) for c in (x, y, h)):
        raise TopoError("pose must be finite")
    if graph.nodes:
        graph.height_prev = graph.height_now
    graph.height_now = h

    nid, d_min = graph.nearest(x, y)
    if nid is not None and d_min < config.delta_merge:
        if nid != graph.current_node:
            graph.nodes[nid].visit_count += 1
            if graph.current_node is not None:
                graph.add_edge(graph.current_node, nid)
        graph.current_node = nid
        return graph, nid, False

    new_id = max(graph.nodes) + 1 if graph.nodes else 0
    graph.nodes[new_id] = TopoNode(new_id, (x, y), 1, h)
    if graph.current_node is not None:
        graph.add_edge(graph.current_node, new_id)
    graph.current_node = new_id
    return graph, new_id, True


def detect_loop(graph: TopoGraph, config: MemoryConfig = MemoryConfig()) -> Optional[str]:
    if graph.current.visit_count > config.tau_loop:
        return LOOP_ALERT
    return None


def vertical_status(height_now: float, height_ref: float, config: MemoryConfig = MemoryConfig()) -> VerticalStatus:
    dh = height_now - height_ref
    if dh > config.delta_h:
        return VerticalStatus.UPSTAIRS
    if dh < -config.delta_h:
        return VerticalStatus.DOWNSTAIRS
    return VerticalStatus.LEVEL


def state_summary(graph: TopoGraph, config: MemoryConfig = MemoryConfig()) -> str:
    """Fixed-order text block describing the agent's place in the graph."""
    node = graph.current
    ref = graph.height_prev if graph.height_prev is not None else graph.height_now
    vs = vertical_status(graph.height_now, ref, config)
    lines = [
        f"current_node: {node.id}",
        f"visit_count: {node.visit_count}",
        f"neighbors: {len(graph.neighbors(node.id))}",
        f"known_nodes: {len(graph.nodes)}",
        f"vertical: {vs.value} (dh={graph.height_now - ref:+.2f} m)",
    ]
    alert = detect_loop(graph, config)
    lines.append(f"loop_alert: {alert}" if alert else "loop_alert: none")
    return "\n".join(lines)


def dump_graph(graph: TopoGraph) -> str:
    """Text export: one ``node`` line per node, then ``edge`` lines, then ``current``."""
    out = [GRAPH_FORMAT_HEADER]
    for nid in sorted(graph.nodes):
        n = graph.nodes[nid]
        out.append(f"node {n.id} {n.position[0]!r} {n.position[1]!r} {n.floor_height!r} {n.visit_count}")
    for a, b in sorted(graph.edges):
        out.append(f"edge {a} {b}")
    if graph.current_node is not None:
        out.append(f"current {graph.current_node}")
    out.append(f"heights {graph.height_now!r} {graph.height_prev!r}")
    return "\n".join(out) + "\n"


def load_graph(source: Union[str, Path, Iterable[str]]) -> TopoGraph:
    if isinstance(source, Path):
        lines = source.read_text().splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = list(source)
    if not lines or lines[0].strip() != GRAPH_FORMAT_HEADER:
        raise TopoError("missing topo-graph header")
    g = TopoGraph()
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            kind = parts[0]
            if kind == "node":
                nid, x, y, h, c = int(parts[1]), float(parts[2]), float(parts[3]), float(parts[4]), int(parts[5])
                if c < 1:
                    raise TopoError("visit_count must be >= 1")
                g.nodes[nid] = TopoNode(nid, (x, y), c, h)
            elif kind == "edge":
                g.add_edge(int(parts[1]), int(parts[2]))
            elif kind == "current":
                g.current_node = int(parts[1])
            elif kind == "heights":
                g.height_now = float(parts[1])
                g.height_prev = None if parts[2] == "None" else float(parts[2])
            else:
                raise TopoError(f"unknown record {kind!r}")
        except (IndexError, ValueError) as exc:
            raise TopoError(f"line {lineno}: {exc}") from exc
    if g.current_node is not None and g.current_node not in g.nodes:
        raise TopoError("current node does not exist")
    return g
