"""JSON-lines run log with per-stage timings and config echo."""

from __future__ import annotations

import json
import time


class RunLog:
    def __init__(self, path=None):
        self.path = path
        self.records: list[dict] = []
        if path is not None:
            # truncate any previous log
            open(path, "w", encoding="utf-8").close()

    def emit(self, event: str, **fields) -> dict:
        record = {"event": event, **fields}
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True, default=str) + "\n")
        return record

    def stage(self, name: str):
        return _Stage(self, name)


class _Stage:
    def __init__(self, log: RunLog, name: str):
        self.log = log
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            self.log.emit("stage", name=self.name, seconds=round(elapsed, 6))
        else:
            self.log.emit("stage_failed", name=self.name, seconds=round(elapsed, 6),
                          error=str(exc))
        return False
