"""numba-compiled loop kernels; see ``_numpy`` for the reference semantics."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def integrate_tsdf(sdf, weight, origin, voxel_size, truncation, w_max, cam_from_world, fx, fy, cx, cy, depth, obs_weight):
    nx, ny, nz = sdf.shape
    h, w = depth.shape
    r = cam_from_world
    touched = 0
    for i in range(nx):
        X = origin[0] + (i + 0.5) * voxel_size
        for j in range(ny):
            Y = origin[1] + (j + 0.5) * voxel_size
            for k in range(nz):
                Z = origin[2] + (k + 0.5) * voxel_size
                pz = r[2, 0] * X + r[2, 1] * Y + r[2, 2] * Z + r[2, 3]
                if not pz > 1e-9:
                    continue
                px = r[0, 0] * X + r[0, 1] * Y + r[0, 2] * Z + r[0, 3]
                py = r[1, 0] * X + r[1, 1] * Y + r[1, 2] * Z + r[1, 3]
                u = math.floor(fx * px / pz + cx + 0.5)
                v = math.floor(fy * py / pz + cy + 0.5)
                if u < 0 or u >= w or v < 0 or v >= h:
                    continue
                d = depth[int(v), int(u)]
                if not d > 0:
                    continue
                dist = d - pz
                if dist < -truncation:
                    continue
                obs = min(dist, truncation)
                w_old = weight[i, j, k]
                sdf[i, j, k] = (w_old * sdf[i, j, k] + obs_weight * obs) / (w_old + obs_weight)
                weight[i, j, k] = min(w_old + obs_weight, w_max)
                touched += 1
    return touched


@njit(cache=True)
def _trilinear_one(sdf, weight, origin, voxel_size, p):
    nx, ny, nz = sdf.shape
    dims = (nx, ny, nz)
    f = np.empty(3)
    i0 = np.empty(3, dtype=np.int64)
    for a in range(3):
        fa = (p[a] - origin[a]) / voxel_size - 0.5
        if fa < -0.5 or fa > dims[a] - 0.5:
            return np.nan, 0.0, 0.0
        fa = min(max(fa, 0.0), dims[a] - 1.0)
        ia = min(math.floor(fa), dims[a] - 2)
        ia = max(ia, 0)
        i0[a] = ia
        f[a] = fa - ia
    s = 0.0
    wt = 0.0
    wmin = np.inf
    for dx in range(2):
        wx = f[0] if dx else 1.0 - f[0]
        for dy in range(2):
            wy = f[1] if dy else 1.0 - f[1]
            for dz in range(2):
                wz = f[2] if dz else 1.0 - f[2]
                c = wx * wy * wz
                ix = i0[0] + dx
                iy = i0[1] + dy
                iz = i0[2] + dz
                s += c * sdf[ix, iy, iz]
                cw = weight[ix, iy, iz]
                wt += c * cw
                wmin = min(wmin, cw)
    return s, wt, wmin


@njit(cache=True)
def sample_tsdf(sdf, weight, origin, voxel_size, pts):
    n = pts.shape[0]
    s = np.empty(n)
    wt = np.empty(n)
    wmin = np.empty(n)
    for q in range(n):
        s[q], wt[q], wmin[q] = _trilinear_one(sdf, weight, origin, voxel_size, pts[q])
    return s, wt, wmin


@njit(cache=True)
def raycast_tsdf(sdf, weight, origin, voxel_size, ray_origins, ray_dirs, max_range, step):
    n = ray_origins.shape[0]
    hits = np.full((n, 3), np.nan)
    n_steps = int(math.floor(max_range / step)) + 1
    p = np.empty(3)
    for q in range(n):
        prev_ok = False
        prev_s = 0.0
        prev_t = 0.0
        for k in range(n_steps):
            t = k * step
            for a in range(3):
                p[a] = ray_origins[q, a] + t * ray_dirs[q, a]
            s, _, wmin = _trilinear_one(sdf, weight, origin, voxel_size, p)
            ok = wmin > 0
            if ok and prev_ok and prev_s > 0 and s <= 0:
                th = prev_t + (t - prev_t) * prev_s / (prev_s - s)
                for a in range(3):
                    hits[q, a] = ray_origins[q, a] + th * ray_dirs[q, a]
                break
            prev_s = s if ok else 0.0
            prev_ok = ok
            prev_t = t
    return hits


@njit(cache=True)
def ray_boxes_nearest(origin, dirs, box_min, box_max, floor_z):
    n = dirs.shape[0]
    nb = box_min.shape[0]
    best_t = np.full(n, np.inf)
    best_i = np.full(n, -1, dtype=np.int64)
    for q in range(n):
        for b in range(nb):
            t_near = -np.inf
            t_far = np.inf
            miss = False
            for a in range(3):
                d = dirs[q, a]
                o = origin[a]
                if d == 0.0:
                    if o < box_min[b, a] or o > box_max[b, a]:
                        miss = True
                        break
                    continue
                t1 = (box_min[b, a] - o) / d
                t2 = (box_max[b, a] - o) / d
                if t1 > t2:
                    t1, t2 = t2, t1
                t_near = max(t_near, t1)
                t_far = min(t_far, t2)
            if miss or t_near > t_far or t_far < 0:
                continue
            th = t_near if t_near >= 0 else t_far
            if th < best_t[q]:
                best_t[q] = th
                best_i[q] = b
        dz = dirs[q, 2]
        if dz < 0:
            tf = (floor_z - origin[2]) / dz
            if tf >= 0 and tf < best_t[q]:
                best_t[q] = tf
                best_i[q] = nb
    return best_t, best_i


@njit(cache=True)
def dtw_cost(a, b):
    n = a.shape[0]
    m = b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            c = 0.0
            for k in range(a.shape[1]):
                diff = a[i - 1, k] - b[j - 1, k]
                c += diff * diff
            best = min(min(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
            acc[i, j] = math.sqrt(c) + best
    return acc[n, m]
