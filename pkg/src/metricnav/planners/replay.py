"""Record every backend exchange to JSON lines and replay it offline.

Replay file: a header line
``{"format": "metricnav-replay", "version": 1, "backend": id, "episode_id": id}``
then one record per exchange, in call order::

    {"kind": "decide", "step": 3, "attempt": 0, "digest": sha256, "response": text}
    {"kind": "decide", "step": 4, "attempt": 0, "digest": sha256, "error": message}
    {"kind": "decompose", "step": 0, "attempt": 0, "digest": sha256, "plan": [[text, done], ...]}

``digest`` covers the request kind, step, attempt and the full prompt bundle
(text and image pixels), so a replay notices any divergence.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Union

from ..reasoning.prompt import TaskPlan
from .base import DECOMPOSE, BackendError, PlannerBackend, PlannerRequest, PlannerResponse

REPLAY_FORMAT = "metricnav-replay"
REPLAY_VERSION = 1
REPLAY_FILE = "replay.jsonl"


class ReplayMismatchError(RuntimeError):
    """The replayed run asked for something the log does not contain."""


def request_digest(request: PlannerRequest) -> str:
    h = hashlib.sha256(f"{request.kind}|{request.step}|{request.attempt}|".encode())
    h.update(request.prompt.digest().encode())
    return h.hexdigest()


class RecordingBackend(PlannerBackend):
    """Wraps another backend and appends each exchange to a replay file."""

    def __init__(self, inner: PlannerBackend, path: Union[str, Path]) -> None:
        super().__init__()
        self.inner = inner
        self.path = Path(path)
        self.backend_id = inner.backend_id

    def begin_episode(self, episode, episode_dir=None) -> None:
        super().begin_episode(episode, episode_dir)
        self.inner.begin_episode(episode, episode_dir)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        header = {"format": REPLAY_FORMAT, "version": REPLAY_VERSION, "backend": self.backend_id, "episode_id": episode.id}
        self.path.write_text(json.dumps(header) + "\n", encoding="utf-8")

    def _write(self, record: dict) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def _base(self, request: PlannerRequest) -> dict:
        return {"kind": request.kind, "step": request.step, "attempt": request.attempt, "digest": request_digest(request)}

    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        rec = self._base(request)
        try:
            resp = self.inner.decide(request)
        except BackendError as exc:
            self._write({**rec, "error": str(exc)})
            raise
        self._write({**rec, "response": resp.raw})
        return resp

    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        rec = self._base(request if request.kind == DECOMPOSE else _as_decompose(request))
        try:
            plan = self.inner.decompose(instruction, request)
        except BackendError as exc:
            self._write({**rec, "error": str(exc)})
            raise
        self._write({**rec, "plan": [[t, d] for t, d in plan.pairs()]})
        return plan


def _as_decompose(request: PlannerRequest) -> PlannerRequest:
    return PlannerRequest(request.prompt, request.step, request.episode_id, request.attempt, DECOMPOSE)


def read_replay(path: Union[str, Path]) -> tuple:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ReplayMismatchError(f"{path}: empty replay file")
    try:
        header = json.loads(lines[0])
        records = [json.loads(line) for line in lines[1:] if line.strip()]
    except json.JSONDecodeError as exc:
        raise ReplayMismatchError(f"{path}: corrupt replay file ({exc})") from exc
    if header.get("format") != REPLAY_FORMAT or header.get("version") != REPLAY_VERSION:
        raise ReplayMismatchError(f"{path}: not a {REPLAY_FORMAT} v{REPLAY_VERSION} file")
    return header, records


class ReplayBackend(PlannerBackend):
    """Serves logged responses in order, checking each request digest.

    ``source`` is a replay file, or a run directory holding
    ``<episode_id>/replay.jsonl`` per episode.
    """

    def __init__(self, source: Union[str, Path]) -> None:
        super().__init__()
        self.source = Path(source)
        self.backend_id = "replay"
        self._records: List[dict] = []
        self._pos = 0

    def _file_for(self, episode_id: str) -> Path:
        return self.source / episode_id / REPLAY_FILE if self.source.is_dir() else self.source

    def begin_episode(self, episode, episode_dir=None) -> None:
        super().begin_episode(episode, episode_dir)
        path = self._file_for(episode.id)
        if not path.exists():
            raise ReplayMismatchError(f"no replay log for episode {episode.id!r} at {path}")
        header, self._records = read_replay(path)
        if header.get("episode_id") != episode.id:
            raise ReplayMismatchError(f"{path}: log is for episode {header.get('episode_id')!r}, not {episode.id!r}")
        self.backend_id = str(header.get("backend", "replay"))
        self._pos = 0

    def _next(self, request: PlannerRequest) -> dict:
        if self._pos >= len(self._records):
            raise ReplayMismatchError(f"replay log exhausted at {request.kind} step {request.step}")
        rec = self._records[self._pos]
        self._pos += 1
        want = request_digest(request)
        key = (request.kind, request.step, request.attempt)
        if (rec.get("kind"), rec.get("step"), rec.get("attempt")) != key or rec.get("digest") != want:
            raise ReplayMismatchError(
                f"request {key} diverges from log record {self._pos} "
                f"({rec.get('kind')}, {rec.get('step')}, {rec.get('attempt')})"
            )
        if "error" in rec:
            raise BackendError(rec["error"])
        return rec

    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        rec = self._next(request)
        return PlannerResponse(rec["response"], 0.0, self.backend_id)

    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        rec = self._next(request if request.kind == DECOMPOSE else _as_decompose(request))
        return TaskPlan.from_pairs((t, d) for t, d in rec["plan"])

    @property
    def exhausted(self) -> bool:
        return self._pos >= len(self._records)
