"""Append-only event log: one JSON object per line.

The log is crash-consistent by construction. Lines are written whole
and flushed; a reader accepts any prefix of the file and ignores a
trailing partial line, but a malformed line in the interior means the
file was edited and is reported as an error.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from fibersense.errors import FormatError


@dataclass(frozen=True)
class EventRecord:
    event: str  # created | updated | ended
    id: int
    t_s: float
    x_start_m: float
    x_end_m: float
    centroid_m: float
    motion: str
    velocity_mps: float
    label: str | None = None
    confidence: float | None = None
    smoothed_label: str | None = None
    record_seq: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "EventRecord":
        try:
            return cls(
                event=str(obj["event"]),
                id=int(obj["id"]),
                t_s=float(obj["t_s"]),
                x_start_m=float(obj["x_start_m"]),
                x_end_m=float(obj["x_end_m"]),
                centroid_m=float(obj["centroid_m"]),
                motion=str(obj["motion"]),
                velocity_mps=float(obj["velocity_mps"]),
                label=obj.get("label"),
                confidence=obj.get("confidence"),
                smoothed_label=obj.get("smoothed_label"),
                record_seq=int(obj.get("record_seq", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed event record: {exc}") from exc


class EventLog:
    """Writer plus in-memory mirror for queries while the service runs."""

    def __init__(self, path=None):
        self.path = path
        self.records: list[EventRecord] = []
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def append(self, record: EventRecord) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(record.to_dict()) + "\n")
            self._fh.flush()

    def query(self, since_t_s: float | None = None, event_id: int | None = None):
        out = [
            r
            for r in self.records
            if (since_t_s is None or r.t_s >= since_t_s)
            and (event_id is None or r.id == event_id)
        ]
        out.sort(key=lambda r: (r.t_s, r.id, r.record_seq))
        return out

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_event_log(path) -> list[EventRecord]:
    """Parse a log file, tolerating an incomplete final line."""
    records = []
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    last_index = len(lines) - 1
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if i == last_index:
                break  # interrupted write; the prefix before it is intact
            raise FormatError(f"{path}:{i + 1}: corrupt event log line: {exc}") from exc
        records.append(EventRecord.from_dict(obj))
    return records
