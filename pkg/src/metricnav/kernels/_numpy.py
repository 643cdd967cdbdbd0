"""Vectorized numpy implementations of the hot loops.

Every function here has a twin in ``_numba`` with the same signature and
the same arithmetic order, so both paths agree to rounding.
"""

from __future__ import annotations

import numpy as np


def integrate_tsdf(
    sdf: np.ndarray,
    weight: np.ndarray,
    origin: np.ndarray,
    voxel_size: float,
    truncation: float,
    w_max: float,
    cam_from_world: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    depth: np.ndarray,
    obs_weight: float,
) -> int:
    """Fuse one depth image into (sdf, weight) in place. Returns the number of voxels touched."""
    nx, ny, nz = sdf.shape
    h, w = depth.shape
    xs = origin[0] + (np.arange(nx) + 0.5) * voxel_size
    ys = origin[1] + (np.arange(ny) + 0.5) * voxel_size
    zs = origin[2] + (np.arange(nz) + 0.5) * voxel_size
    r = cam_from_world[:3, :3]
    t = cam_from_world[:3, 3]
    X = xs[:, None, None]
    Y = ys[None, :, None]
    Z = zs[None, None, :]
    pz = r[2, 0] * X + r[2, 1] * Y + r[2, 2] * Z + t[2]
    px = r[0, 0] * X + r[0, 1] * Y + r[0, 2] * Z + t[0]
    py = r[1, 0] * X + r[1, 1] * Y + r[1, 2] * Z + t[1]

    front = pz > 1e-9
    safe_z = np.where(front, pz, 1.0)
    u = np.floor(fx * px / safe_z + cx + 0.5)
    v = np.floor(fy * py / safe_z + cy + 0.5)
    inside = front & (u >= 0) & (u < w) & (v >= 0) & (v < h)
    ui = np.where(inside, u, 0).astype(np.int64)
    vi = np.where(inside, v, 0).astype(np.int64)
    d = depth[vi, ui]
    dist = d - pz
    upd = inside & (d > 0) & (dist >= -truncation)
    obs = np.minimum(dist, truncation)

    w_old = weight[upd]
    s_old = sdf[upd]
    sdf[upd] = (w_old * s_old + obs_weight * obs[upd]) / (w_old + obs_weight)
    weight[upd] = np.minimum(w_old + obs_weight, w_max)
    return int(upd.sum())


def _trilinear(sdf, weight, origin, voxel_size, pts):
    """Trilinear sdf/weight plus the minimum corner weight; NaN sdf outside the grid."""
    dims = np.array(sdf.shape)
    f = (pts - origin) / voxel_size - 0.5
    outside = np.any((f < -0.5) | (f > dims - 0.5), axis=1)
    f = np.clip(f, 0.0, dims - 1.0)
    i0 = np.minimum(np.floor(f), dims - 2).astype(np.int64)
    i0 = np.maximum(i0, 0)
    fr = f - i0
    s = np.zeros(len(pts))
    wt = np.zeros(len(pts))
    wmin = np.full(len(pts), np.inf)
    for dx in (0, 1):
        wx = fr[:, 0] if dx else 1.0 - fr[:, 0]
        for dy in (0, 1):
            wy = fr[:, 1] if dy else 1.0 - fr[:, 1]
            for dz in (0, 1):
                wz = fr[:, 2] if dz else 1.0 - fr[:, 2]
                c = wx * wy * wz
                ix, iy, iz = i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz
                s += c * sdf[ix, iy, iz]
                cw = weight[ix, iy, iz]
                wt += c * cw
                wmin = np.minimum(wmin, cw)
    s[outside] = np.nan
    wt[outside] = 0.0
    wmin[outside] = 0.0
    return s, wt, wmin


def sample_tsdf(sdf, weight, origin, voxel_size, pts):
    return _trilinear(sdf, weight, origin, voxel_size, np.asarray(pts, dtype=float).reshape(-1, 3))


def raycast_tsdf(
    sdf: np.ndarray,
    weight: np.ndarray,
    origin: np.ndarray,
    voxel_size: float,
    ray_origins: np.ndarray,
    ray_dirs: np.ndarray,
    max_range: float,
    step: float,
) -> np.ndarray:
    """March rays through the field; first observed +/- zero crossing per ray, NaN where none."""
    n = len(ray_origins)
    hits = np.full((n, 3), np.nan)
    n_steps = int(np.floor(max_range / step)) + 1
    active = np.ones(n, dtype=bool)
    prev_s = np.zeros(n)
    prev_ok = np.zeros(n, dtype=bool)
    prev_t = np.zeros(n)
    for k in range(n_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        t = k * step
        pts = ray_origins[idx] + t * ray_dirs[idx]
        s, _, wmin = _trilinear(sdf, weight, origin, voxel_size, pts)
        ok = wmin > 0
        cross = ok & prev_ok[idx] & (prev_s[idx] > 0) & (s <= 0)
        if np.any(cross):
            c = idx[cross]
            ps = prev_s[c]
            th = prev_t[c] + (t - prev_t[c]) * ps / (ps - s[cross])
            hits[c] = ray_origins[c] + th[:, None] * ray_dirs[c]
            active[c] = False
        prev_s[idx] = np.where(ok, s, 0.0)
        prev_ok[idx] = ok
        prev_t[idx] = t
    return hits


def ray_boxes_nearest(
    origin: np.ndarray,
    dirs: np.ndarray,
    box_min: np.ndarray,
    box_max: np.ndarray,
    floor_z: float,
) -> tuple:
    """Nearest hit of rays from one origin against boxes and the floor plane.

    Returns (t, index): index in [0, B) for a box, B for the floor, -1 for a miss (t = inf).
    """
    n = len(dirs)
    nb = len(box_min)
    best_t = np.full(n, np.inf)
    best_i = np.full(n, -1, dtype=np.int64)
    if nb:
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (box_min[None, :, :] - origin) / dirs[:, None, :]
            t2 = (box_max[None, :, :] - origin) / dirs[:, None, :]
        # zero direction component: parallel slab, infinite interval if origin within it
        par = dirs[:, None, :] == 0.0
        within = (origin >= box_min) & (origin <= box_max)
        lo_t = np.where(par, np.where(within[None], -np.inf, np.inf), np.minimum(t1, t2))
        hi_t = np.where(par, np.where(within[None], np.inf, -np.inf), np.maximum(t1, t2))
        t_near = lo_t.max(axis=2)
        t_far = hi_t.min(axis=2)
        hit = (t_near <= t_far) & (t_far >= 0)
        th = np.where(t_near >= 0, t_near, t_far)
        th = np.where(hit, th, np.inf)
        j = np.argmin(th, axis=1)
        tj = th[np.arange(n), j]
        better = tj < best_t
        best_t = np.where(better, tj, best_t)
        best_i = np.where(better, j, best_i)
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tf = (floor_z - origin[2]) / dz
    floor_hit = (dz < 0) & (tf >= 0) & (tf < best_t)
    best_t = np.where(floor_hit, tf, best_t)
    best_i = np.where(floor_hit, nb, best_i)
    return best_t, best_i


def dtw_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Classic DTW accumulated cost under Euclidean point distance, by anti-diagonal sweeps."""
    n, m = len(a), len(b)
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for d in range(2, n + m + 1):
        i = np.arange(max(1, d - m), min(n, d - 1) + 1)
        j = d - i
        best = np.minimum(np.minimum(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return float(acc[n, m])
