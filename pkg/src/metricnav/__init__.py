"""Decoupled metric-map navigation stack at desk scale.

Subpackages:

- ``geometry``: poses, cameras, rays.
- ``tsdf``: volumetric fusion, field queries, raycasting.
- ``bev``: top-down map rendering and the normalized coordinate grid.
- ``topo``: topological memory graph with loop and vertical alerts.
- ``sim``: analytic scenes, RGB-D rendering, waypoint controller.
- ``reasoning``: view selection, prompt assembly, action parsing and grounding.
- ``planners``: scripted, greedy and remote decision backends.
- ``evaluation``: episode runner and VLN-CE metrics.
"""

__version__ = "0.1.0"
