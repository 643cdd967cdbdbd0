"""HTTP client for a remote multimodal model service.

Wire protocol: one ``POST`` per request with a JSON body::

    {"protocol": "metricnav-remote/1",
     "episode_id": str, "step": int, "attempt": int,
     "kind": "decide" | "decompose",
     "prompt": str,                                  # serialized prompt text
     "images": [{"name": "bev", "png_base64": str}, ...]}

The response body is the model's raw text (UTF-8). Anything but HTTP 200 with
a nonempty body counts as a transport failure and is retried with
exponential backoff.
"""

from __future__ import annotations

import base64
import json
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, replace
from typing import Callable, Optional

from ..reasoning.prompt import TaskPlan
from .base import DECOMPOSE, BackendError, PlannerBackend, PlannerRequest, PlannerResponse, parse_plan

PROTOCOL = "metricnav-remote/1"
ENV_ENDPOINT = "METRICNAV_REMOTE_ENDPOINT"
ENV_TOKEN = "METRICNAV_REMOTE_TOKEN"
ENV_TIMEOUT = "METRICNAV_REMOTE_TIMEOUT"


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str = ""
    token: Optional[str] = None
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 0.5

    def with_env(self, environ=None) -> "RemoteConfig":
        env = os.environ if environ is None else environ
        cfg = self
        if env.get(ENV_ENDPOINT):
            cfg = replace(cfg, endpoint=env[ENV_ENDPOINT])
        if env.get(ENV_TOKEN):
            cfg = replace(cfg, token=env[ENV_TOKEN])
        if env.get(ENV_TIMEOUT):
            try:
                cfg = replace(cfg, timeout=float(env[ENV_TIMEOUT]))
            except ValueError as exc:
                raise ValueError(f"{ENV_TIMEOUT} must be a number, got {env[ENV_TIMEOUT]!r}") from exc
        return cfg


def encode_request(request: PlannerRequest) -> bytes:
    body = {
        "protocol": PROTOCOL,
        "episode_id": request.episode_id,
        "step": request.step,
        "attempt": request.attempt,
        "kind": request.kind,
        "prompt": request.prompt.text(),
        "images": [
            {"name": name, "png_base64": base64.b64encode(png).decode("ascii")}
            for name, png in request.prompt.attachments()
        ],
    }
    return json.dumps(body).encode("utf-8")


class RemoteBackend(PlannerBackend):
    backend_id = "remote"

    def __init__(self, config: RemoteConfig, sleep: Callable[[float], None] = time.sleep) -> None:
        super().__init__()
        if not config.endpoint:
            raise ValueError(f"remote backend needs an endpoint (config or {ENV_ENDPOINT})")
        if config.retries < 0 or config.timeout <= 0:
            raise ValueError("remote retries must be >= 0 and timeout > 0")
        self.config = config
        self._sleep = sleep

    def _post(self, payload: bytes) -> str:
        headers = {"Content-Type": "application/json"}
        if self.config.token:
            headers["Authorization"] = f"Bearer {self.config.token}"
        last = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            req = urllib.request.Request(self.config.endpoint, data=payload, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
                    text = resp.read().decode("utf-8", errors="replace")
                if text:
                    return text
                last = "empty response body"
            except urllib.error.HTTPError as exc:
                last = f"HTTP {exc.code}"
            except (urllib.error.URLError, OSError) as exc:
                last = str(getattr(exc, "reason", exc))
        raise BackendError(f"remote service failed after {self.config.retries + 1} attempts: {last}")

    def _decide(self, request: PlannerRequest) -> PlannerResponse:
        t0 = time.perf_counter()
        raw = self._post(encode_request(request))
        return PlannerResponse(raw, time.perf_counter() - t0, self.backend_id)

    def decompose(self, instruction: str, request: PlannerRequest) -> TaskPlan:
        request = replace(request, kind=DECOMPOSE)
        return parse_plan(self._post(encode_request(request)))
