"""Append-only JSON-lines event log.

Every state change in the gateway is one line: {"seq", "ts", "kind",
"data"}. Appends are serialized under a lock and fsynced before the
caller gets an ack, so an acked record survives a crash. Reload replays
the lines in order; a half-written trailing line (crash mid-append) is
dropped with a warning and truncated away, while damage anywhere else
is treated as corruption and refuses to start.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from ..serialize import from_jsonable, to_jsonable

log = logging.getLogger("driftwatch.gateway")


class StoreCorrupt(RuntimeError):
    pass


@dataclass(frozen=True)
class Event:
    seq: int
    ts: int
    kind: str
    data: dict[str, Any]


def _parse_line(raw: str, lineno: int) -> Event:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise StoreCorrupt(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict) or not {"seq", "ts", "kind", "data"} <= doc.keys():
        raise StoreCorrupt(f"line {lineno}: not an event record")
    return Event(
        seq=int(doc["seq"]),
        ts=int(doc["ts"]),
        kind=str(doc["kind"]),
        data=from_jsonable(doc["data"]),
    )


class EventLog:
    """Durable event sequence backed by one JSON-lines file."""

    def __init__(self, path: str | os.PathLike[str]):
        self.path = Path(path)
        self.events: list[Event] = []
        self._lock = threading.Lock()
        self._load()
        self._fh = open(self.path, "ab")

    def _load(self) -> None:
        if not self.path.exists():
            self.path.write_bytes(b"")
            return
        blob = self.path.read_bytes()
        lines = blob.split(b"\n")
        tail = lines.pop()  # content after the last newline, b"" when clean
        kept = 0
        for lineno, raw in enumerate(lines, start=1):
            try:
                event = _parse_line(raw.decode("utf-8", errors="strict"), lineno)
            except (StoreCorrupt, UnicodeDecodeError) as exc:
                if lineno == len(lines) and not tail:
                    # Damaged final line: treat like a torn write.
                    tail = raw
                    break
                if isinstance(exc, StoreCorrupt):
                    raise
                raise StoreCorrupt(f"line {lineno}: invalid UTF-8") from None
            if event.seq != kept + 1:
                raise StoreCorrupt(
                    f"line {lineno}: sequence gap (expected {kept + 1}, found {event.seq})"
                )
            self.events.append(event)
            kept += 1
        if tail:
            good = sum(len(line) + 1 for line in lines[:kept])
            log.warning(
                "%s: discarding truncated trailing line (%d bytes past record %d)",
                self.path,
                len(blob) - good,
                kept,
            )
            with open(self.path, "r+b") as fh:
                fh.truncate(good)

    @property
    def next_seq(self) -> int:
        return len(self.events) + 1

    def append(self, kind: str, data: dict[str, Any], ts: int) -> Event:
        """Write one event; returns only after the bytes hit disk."""
        with self._lock:
            event = Event(seq=self.next_seq, ts=ts, kind=kind, data=data)
            doc = {"seq": event.seq, "ts": event.ts, "kind": event.kind, "data": to_jsonable(data)}
            line = json.dumps(doc, separators=(",", ":"), ensure_ascii=False)
            self._fh.write(line.encode("utf-8") + b"\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self.events.append(event)
            return event

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc: object) -> Optional[bool]:
        self.close()
        return None
