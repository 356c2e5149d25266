"""Append-only JSON-lines run log with a versioned header line."""

from __future__ import annotations

import json
import math
from pathlib import Path

SCHEMA = "safexplore.runlog"
VERSION = 1
RECORD_TYPES = (
    "SensorUpdate",
    "GraphDelta",
    "PlanResponse",
    "TrackerSample",
    "Violation",
    "Termination",
)


def _clean(obj):
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


class LogError(ValueError):
    """A run log could not be parsed."""


class RunLog:
    def __init__(self, header: dict):
        self.header = {"type": "header", "schema": SCHEMA, "version": VERSION, **header}
        self.records: list[dict] = []

    def append(self, rtype: str, t: float, **fields) -> dict:
        if rtype not in RECORD_TYPES:
            raise ValueError(f"unknown record type {rtype!r}")
        if self.records and t < self.records[-1]["t"] - 1e-12:
            raise ValueError("record timestamps must be non-decreasing")
        rec = {"type": rtype, "t": t, **fields}
        self.records.append(rec)
        return rec

    def of_type(self, rtype: str) -> list[dict]:
        return [r for r in self.records if r["type"] == rtype]

    @property
    def violations(self) -> list[dict]:
        return self.of_type("Violation")

    def lines(self):
        yield json.dumps(_clean(self.header), sort_keys=True, separators=(",", ":"))
        for rec in self.records:
            yield json.dumps(_clean(rec), sort_keys=True, separators=(",", ":"))

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path) -> "RunLog":
        lines = Path(path).read_text().splitlines()
        return cls.parse(lines)

    @classmethod
    def parse(cls, lines) -> "RunLog":
        lines = [ln for ln in lines if ln.strip()]
        if not lines:
            raise LogError("empty run log")
        try:
            header = json.loads(lines[0])
            records = [json.loads(ln) for ln in lines[1:]]
        except json.JSONDecodeError as exc:
            raise LogError(f"malformed run log line: {exc}") from exc
        if header.get("type") != "header" or header.get("schema") != SCHEMA:
            raise LogError("run log does not start with a safexplore header")
        if header.get("version") != VERSION:
            raise LogError(f"unsupported run log version {header.get('version')}")
        log = cls({k: v for k, v in header.items() if k not in ("type", "schema", "version")})
        for rec in records:
            if rec.get("type") not in RECORD_TYPES or "t" not in rec:
                raise LogError(f"malformed record {rec!r}")
        log.records = records
        return log
