"""Hot-loop kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly. Set ``METRICNAV_NO_JIT=1``
to force the numpy implementations (useful for debugging and for platforms
where compilation is slow or unavailable).
"""

from __future__ import annotations

import os

from . import _numpy

_DISABLED = os.environ.get("METRICNAV_NO_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

_impl = _numpy
if not _DISABLED:
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy

BACKEND = "numba" if _impl is not _numpy else "numpy"

integrate_tsdf = _impl.integrate_tsdf
sample_tsdf = _impl.sample_tsdf
raycast_tsdf = _impl.raycast_tsdf
ray_boxes_nearest = _impl.ray_boxes_nearest
dtw_cost = _impl.dtw_cost

__all__ = [
    "BACKEND",
    "integrate_tsdf",
    "sample_tsdf",
    "raycast_tsdf",
    "ray_boxes_nearest",
    "dtw_cost",
]
