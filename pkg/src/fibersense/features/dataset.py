"""Line-delimited JSON storage for labeled feature rows."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from fibersense.errors import DatasetError
from fibersense.features.vector import N_FEATURES


@dataclass(frozen=True)
class DatasetRow:
    features: tuple
    label: str
    source_event_id: int
    t_s: float

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "label": self.label,
            "source_event_id": self.source_event_id,
            "t_s": self.t_s,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DatasetRow":
        try:
            features = tuple(float(v) for v in obj["features"])
            label = str(obj["label"])
            event_id = int(obj["source_event_id"])
            t_s = float(obj["t_s"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"malformed dataset row: {exc}") from exc
        if len(features) != N_FEATURES:
            raise DatasetError(f"row has {len(features)} features, expected {N_FEATURES}")
        if not all(math.isfinite(v) for v in features):
            raise DatasetError("row contains non-finite feature values")
        return cls(features=features, label=label, source_event_id=event_id, t_s=t_s)


def append_rows(path, rows) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row.to_dict()) + "\n")


def write_dataset(path, rows) -> None:
    Path(path).write_text("", encoding="utf-8")
    append_rows(path, rows)


def read_dataset(path) -> list[DatasetRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            rows.append(DatasetRow.from_dict(obj))
    return rows
