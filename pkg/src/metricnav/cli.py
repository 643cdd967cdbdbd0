"""Command line entry point: ``metricnav run | replay | render-map | score | validate-scene``.

Exit codes:

    0  success
    2  configuration or usage error (bad flag, bad config key, unreadable suite)
    3  scene or episode validation failed
    4  backend could not be set up (missing script, no remote endpoint)
    5  replay diverged from its log
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, kernels
from .evaluation.config import BACKENDS, ConfigError, RunConfig, config_from_dict, load_run_config
from .evaluation.report import RunReport
from .evaluation.runner import SuiteError, load_suite, run_episode, run_suite, score_trajectory
from .planners import (
    GreedyBackend,
    PlannerInputError,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    ReplayMismatchError,
    ScriptedBackend,
    ScriptError,
)
from .planners.replay import REPLAY_FILE
from .sim.controller import ControllerError, read_trajectory
from .sim.scene import SceneError, load_episode, load_scene, resolve_scene_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCENE = 3
EXIT_BACKEND = 4
EXIT_REPLAY = 5

MANIFEST = "manifest.json"
log = logging.getLogger("metricnav")


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def make_backend(name: str, config: RunConfig):
    if name == "scripted":
        return ScriptedBackend()
    if name == "greedy":
        return GreedyBackend()
    if name == "remote":
        try:
            return RemoteBackend(config.remote.with_env())
        except ValueError as exc:
            raise CliError(EXIT_BACKEND, str(exc)) from exc
    raise CliError(EXIT_CONFIG, f"unknown backend {name!r}")


def _load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return load_run_config(path)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


def _load_suite(path: str):
    try:
        return load_suite(path)
    except SuiteError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    except SceneError as exc:
        raise CliError(EXIT_SCENE, str(exc)) from exc


def _run_guarded(fn):
    try:
        return fn()
    except (ScriptError, PlannerInputError) as exc:
        raise CliError(EXIT_BACKEND, str(exc)) from exc
    except ReplayMismatchError as exc:
        raise CliError(EXIT_REPLAY, str(exc)) from exc


def cmd_run(args) -> int:
    config = _load_config(args.config)
    suite_path = args.episodes or config.episodes
    if not suite_path:
        raise CliError(EXIT_CONFIG, "no episode suite given (use --episodes or 'episodes' in the config)")
    backend_name = args.backend or config.backend
    out = Path(args.output or config.output_dir or "runs/latest")
    suite = _load_suite(suite_path)
    make_backend(backend_name, config)  # fail fast on setup errors

    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "metricnav": __version__,
        "suite": str(Path(suite_path).resolve()),
        "backend": backend_name,
        "config": config.to_dict(),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def factory(episode_id: str):
        return RecordingBackend(make_backend(backend_name, config), out / episode_id / REPLAY_FILE)

    log.info("running %d episodes with %s backend (kernels: %s)", len(suite), backend_name, kernels.BACKEND)
    results = _run_guarded(lambda: run_suite(suite, factory, config.agent, out))
    report = RunReport.build(results, config.digest(), backend_name)
    report.write(out)
    sys.stdout.write(report.summary_table())
    log.info("report written to %s", out / "report.json")
    return EXIT_OK


def _read_manifest(run_dir: Path) -> dict:
    try:
        return json.loads((run_dir / MANIFEST).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"{run_dir} is not a run directory (no {MANIFEST})") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_CONFIG, f"{run_dir / MANIFEST}: {exc}") from exc


def cmd_replay(args) -> int:
    run_dir = Path(args.run_dir)
    manifest = _read_manifest(run_dir)
    try:
        config = config_from_dict(manifest["config"])
    except (ConfigError, KeyError) as exc:
        raise CliError(EXIT_CONFIG, f"manifest config unusable: {exc}") from exc
    suite = _load_suite(args.episodes or manifest["suite"])
    out = Path(args.output) if args.output else run_dir / "replay"
    results = _run_guarded(lambda: run_suite(suite, lambda _id: ReplayBackend(run_dir), config.agent, out))
    report = RunReport.build(results, config.digest(), manifest["backend"])
    report.write(out)
    sys.stdout.write(report.summary_table())

    mismatches = []
    original = run_dir / "report.json"
    if original.exists() and original.read_bytes() != (out / "report.json").read_bytes():
        mismatches.append("report.json")
    for ep, _ in suite:
        a, b = run_dir / ep.id / "trajectory.txt", out / ep.id / "trajectory.txt"
        if a.exists() and a.read_bytes() != b.read_bytes():
            mismatches.append(f"{ep.id}/trajectory.txt")
    if mismatches:
        raise CliError(EXIT_REPLAY, "replay differs from the original run: " + ", ".join(mismatches))
    log.info("replay matches %s", run_dir)
    return EXIT_OK


def cmd_render_map(args) -> int:
    config = _load_config(args.config)
    try:
        ep = load_episode(args.episode)
        scene = load_scene(resolve_scene_path(ep, args.episode))
    except SceneError as exc:
        raise CliError(EXIT_SCENE, str(exc)) from exc
    backend = ReplayBackend(args.replay) if args.replay else make_backend(args.backend, config)
    out = Path(args.output)
    work = out / "_artifacts"
    result = _run_guarded(lambda: run_episode(ep, backend, config.agent, scene, Path(args.episode).parent, work))
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for step_dir in sorted(work.glob("step_*")):
        bev = step_dir / "bev.png"
        if bev.exists():
            (out / f"{ep.id}_{step_dir.name}.png").write_bytes(bev.read_bytes())
            written += 1
    print(f"{written} BEV images written to {out} ({result.steps} steps, failure={result.failure_code})")
    return EXIT_OK


def cmd_score(args) -> int:
    pairs = []
    if args.run:
        run_dir = Path(args.run)
        manifest = _read_manifest(run_dir)
        for ep, _ in _load_suite(manifest["suite"]):
            pairs.append((ep, run_dir / ep.id / "trajectory.txt"))
    else:
        if not (args.episode and args.trajectory):
            raise CliError(EXIT_CONFIG, "score needs --run, or both --episode and --trajectory")
        try:
            pairs.append((load_episode(args.episode, validate_scene=False), Path(args.trajectory)))
        except SceneError as exc:
            raise CliError(EXIT_SCENE, str(exc)) from exc
    rows = []
    for ep, traj_path in pairs:
        try:
            traj = read_trajectory(traj_path)
        except (OSError, ControllerError) as exc:
            raise CliError(EXIT_CONFIG, f"cannot read trajectory {traj_path}: {exc}") from exc
        if not traj:
            raise CliError(EXIT_CONFIG, f"trajectory {traj_path} is empty")
        r = score_trajectory(traj, ep, 0, "none")
        rows.append(
            {"episode_id": ep.id, "sr": int(r.success), "osr": int(r.osr), "ne": r.ne, "tl": r.tl, "spl": r.spl, "ndtw": r.ndtw}
        )
    print(json.dumps(rows if len(rows) > 1 else rows[0], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate_scene(args) -> int:
    bad = 0
    for p in args.paths:
        try:
            if p.endswith(".toml"):
                ep = load_episode(p)
                print(f"ok  {p}: episode {ep.id!r}")
            else:
                scene = load_scene(p)
                print(f"ok  {p}: scene {scene.name!r}, {len(scene.boxes)} boxes")
        except SceneError as exc:
            print(f"bad {exc}")
            bad += 1
    return EXIT_SCENE if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metricnav", description="Map-grounded instruction-following navigation in box worlds.")
    p.add_argument("--version", action="version", version=f"metricnav {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an episode suite")
    r.add_argument("--episodes", help="suite file (overrides the config)")
    r.add_argument("--backend", choices=BACKENDS, help="planner backend (overrides the config)")
    r.add_argument("--config", help="run configuration TOML")
    r.add_argument("--output", help="output directory (default runs/latest)")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-run a recorded run offline and check it matches")
    rp.add_argument("run_dir")
    rp.add_argument("--episodes", help="suite file (default: the one recorded in the manifest)")
    rp.add_argument("--output", help="where to write the replayed run (default RUN_DIR/replay)")
    rp.set_defaults(func=cmd_replay)

    m = sub.add_parser("render-map", help="export the per-step BEV maps of one episode")
    m.add_argument("--episode", required=True)
    m.add_argument("--backend", choices=("scripted", "greedy", "remote"), default="scripted")
    m.add_argument("--replay", help="replay log to drive the episode instead of a live backend")
    m.add_argument("--config")
    m.add_argument("--output", required=True)
    m.set_defaults(func=cmd_render_map)

    s = sub.add_parser("score", help="recompute metrics from trajectory logs")
    s.add_argument("--run", help="run directory; scores every episode in it")
    s.add_argument("--episode")
    s.add_argument("--trajectory")
    s.set_defaults(func=cmd_score)

    v = sub.add_parser("validate-scene", help="check scene (.scene) or episode (.toml) files")
    v.add_argument("paths", nargs="+")
    v.set_defaults(func=cmd_validate_scene)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"metricnav: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
