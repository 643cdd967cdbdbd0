"""Run-level aggregation with deterministic serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

from .runner import EpisodeResult

REPORT_FORMAT = "metricnav-report"
REPORT_VERSION = 1
_MEANS = ("success", "osr", "spl", "ndtw", "ne", "tl", "steps")


@dataclass(frozen=True)
class RunReport:
    results: tuple
    config_digest: str
    backend_id: str

    @classmethod
    def build(cls, results: Sequence[EpisodeResult], config_digest: str, backend_id: str) -> "RunReport":
        return cls(tuple(sorted(results, key=lambda r: r.episode_id)), config_digest, backend_id)

    @property
    def aggregates(self) -> Dict[str, float]:
        n = len(self.results)
        if n == 0:
            return {k: 0.0 for k in _MEANS}
        # fsum keeps the mean independent of summation order
        return {k: math.fsum(float(getattr(r, k)) for r in self.results) / n for k in _MEANS}

    @property
    def failure_counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for r in self.results:
            out[r.failure_code] = out.get(r.failure_code, 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        agg = self.aggregates
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "backend": self.backend_id,
            "config_digest": self.config_digest,
            "episodes": len(self.results),
            "aggregate": {
                "sr": agg["success"],
                "osr": agg["osr"],
                "spl": agg["spl"],
                "ndtw": agg["ndtw"],
                "ne": agg["ne"],
                "tl": agg["tl"],
                "steps": agg["steps"],
            },
            "failure_codes": self.failure_counts,
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_table(self) -> str:
        head = f"{'episode':<24} {'SR':>3} {'OSR':>3} {'NE':>6} {'TL':>6} {'SPL':>5} {'nDTW':>5} {'steps':>5}  failure"
        lines = [head, "-" * len(head)]
        for r in self.results:
            lines.append(
                f"{r.episode_id:<24} {int(r.success):>3} {int(r.osr):>3} {r.ne:>6.2f} {r.tl:>6.2f} "
                f"{r.spl:>5.2f} {r.ndtw:>5.2f} {r.steps:>5}  {r.failure_code}"
            )
        a = self.aggregates
        lines.append("-" * len(head))
        lines.append(
            f"{'mean':<24} {a['success']:>3.2f} {a['osr']:>3.2f} {a['ne']:>6.2f} {a['tl']:>6.2f} "
            f"{a['spl']:>5.2f} {a['ndtw']:>5.2f} {a['steps']:>5.1f}"
        )
        lines.append(f"backend={self.backend_id} episodes={len(self.results)} config={self.config_digest[:12]}")
        return "\n".join(lines) + "\n"

    def write(self, directory: Union[str, Path]) -> List[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        js, txt = d / "report.json", d / "summary.txt"
        js.write_text(self.to_json(), encoding="utf-8")
        txt.write_text(self.summary_table(), encoding="utf-8")
        return [js, txt]
