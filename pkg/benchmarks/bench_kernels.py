"""Compare the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each mode runs in its own interpreter because the kernel backend is chosen
at import time from METRICNAV_NO_JIT. JIT compile time is excluded by a
warm-up pass.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def workload(repeat: int) -> dict:
    import numpy as np

    from metricnav import kernels
    from metricnav.evaluation.metrics import dtw
    from metricnav.geometry import AgentState, CameraIntrinsics, CameraRig, Ray
    from metricnav.sim import capture_rotation_scan, load_scene
    from metricnav.tsdf import TsdfVolume, integrate_frame, raycast_surface

    scene = load_scene(ROOT / "fixtures" / "scenes" / "box_room.scene")
    intr, rig = CameraIntrinsics(), CameraRig()
    frames = capture_rotation_scan(scene, AgentState(0.3, -0.2, 0.4), intr, rig)
    rng = np.random.default_rng(0)
    dirs = []
    for _ in range(500):
        yaw, el = rng.uniform(-math.pi, math.pi), rng.uniform(-0.6, 0.3)
        dirs.append((math.cos(el) * math.cos(yaw), math.cos(el) * math.sin(yaw), math.sin(el)))
    paths = [(rng.uniform(-5, 5, (60, 2)), rng.uniform(-5, 5, (60, 2))) for _ in range(20)]

    def fuse():
        vol = TsdfVolume.from_bounds((-2.4, -2.4, -0.3), (2.4, 2.4, 2.7))
        for f in frames:
            integrate_frame(vol, f, intr, rig)
        return vol

    vol = fuse()

    def cast():
        for d in dirs:
            raycast_surface(vol, Ray(np.array([0.3, -0.2, 1.25]), np.array(d)), 10.0)

    def align():
        for a, b in paths:
            dtw(a, b)

    def render():
        capture_rotation_scan(scene, AgentState(0.0, 0.0, 0.0), intr, rig)

    out = {"backend": kernels.BACKEND}
    for name, fn in (("fuse 8 frames", fuse), ("raycast 500 rays", cast), ("dtw 20 x 60pt", align), ("render 8-view scan", render)):
        fn()  # warm-up, includes JIT compilation
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    return out


def run_mode(no_jit: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("METRICNAV_NO_JIT", None)
    if no_jit:
        env["METRICNAV_NO_JIT"] = "1"
    proc = subprocess.run(
        [sys.executable, __file__, "--worker", "--repeat", str(repeat)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3, help="timed repetitions per task (best is kept)")
    p.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)
    if args.worker:
        print(json.dumps(workload(args.repeat)))
        return 0
    jit = run_mode(False, args.repeat)
    ref = run_mode(True, args.repeat)
    tasks = [k for k in jit if k != "backend"]
    print(f"{'task':<22} {jit['backend']:>10} {ref['backend']:>10} {'speedup':>8}")
    for t in tasks:
        print(f"{t:<22} {jit[t] * 1e3:>8.1f}ms {ref[t] * 1e3:>8.1f}ms {ref[t] / jit[t]:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
