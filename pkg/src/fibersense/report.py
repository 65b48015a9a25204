"""Offline rendering of a recording into figures and a summary table.

Produces, in the chosen output directory:

* waterfall.png: the full recording as a downsampled dB image, with
  detected events outlined when an event log is supplied;
* events.csv: one summary row per event id.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as mpatches
import matplotlib.pyplot as plt
import numpy as np

from fibersense.pipeline.events import EventRecord
from fibersense.pipeline.potd import PotdReader
from fibersense.pipeline.tiles import TILE_DB_MAX, TILE_DB_MIN, _REF_POWER


def waterfall_matrix(potd_path, time_factor: int = 100, space_factor: int = 2):
    """Downsampled dB image of the whole file plus its axis geometry."""
    with PotdReader(potd_path) as reader:
        hdr = reader.header
        rows = []
        for _, samples in reader.blocks(time_factor):
            if samples.shape[0] < time_factor:
                break
            energy = (
                np.asarray(samples, dtype=np.float64) ** 2
            ).mean(axis=0)
            cols = energy.shape[0] // space_factor
            cells = energy[: cols * space_factor].reshape(cols, space_factor).mean(axis=1)
            rows.append(cells)
    if not rows:
        raise ValueError(f"{potd_path} holds less than one downsample window")
    matrix = 10.0 * np.log10(np.maximum(np.array(rows), 1e-300) / _REF_POWER)
    matrix = np.clip(matrix, TILE_DB_MIN, TILE_DB_MAX)
    dt_s = time_factor / hdr.pulse_rate_hz
    dx_m = space_factor * hdr.bin_size_m
    return matrix, dt_s, dx_m


def summarize_events(records: list[EventRecord]) -> list[dict]:
    """Collapse a record stream into one row per event id."""
    by_id: dict[int, list[EventRecord]] = {}
    for r in records:
        by_id.setdefault(r.id, []).append(r)
    rows = []
    for rid in sorted(by_id):
        recs = sorted(by_id[rid], key=lambda r: (r.t_s, r.record_seq))
        last = recs[-1]
        labels = [r.smoothed_label for r in recs if r.smoothed_label]
        rows.append(
            {
                "id": rid,
                "t_start_s": round(recs[0].t_s, 3),
                "t_end_s": round(last.t_s, 3),
                "duration_s": round(last.t_s - recs[0].t_s, 3),
                "x_start_m": round(min(r.x_start_m for r in recs), 1),
                "x_end_m": round(max(r.x_end_m for r in recs), 1),
                "centroid_m": round(float(np.median([r.centroid_m for r in recs])), 1),
                "motion": last.motion,
                "velocity_mps": round(last.velocity_mps, 2),
                "label": labels[-1] if labels else "",
                "ended": "yes" if last.event == "ended" else "no",
            }
        )
    return rows


def write_event_csv(path, rows: list[dict]) -> None:
    fields = [
        "id", "t_start_s", "t_end_s", "duration_s", "x_start_m", "x_end_m",
        "centroid_m", "motion", "velocity_mps", "label", "ended",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def render_waterfall(potd_path, out_path, records: list[EventRecord] | None = None,
                     time_factor: int = 100, space_factor: int = 2) -> None:
    matrix, dt_s, dx_m = waterfall_matrix(potd_path, time_factor, space_factor)
    duration = matrix.shape[0] * dt_s
    length = matrix.shape[1] * dx_m

    fig, ax = plt.subplots(figsize=(10, 7))
    image = ax.imshow(
        matrix,
        aspect="auto",
        origin="upper",
        extent=(0.0, length, duration, 0.0),
        cmap="inferno",
        vmin=TILE_DB_MIN,
        vmax=TILE_DB_MAX,
    )
    fig.colorbar(image, ax=ax, label="energy (dB re 1 mrad$^2$)")
    ax.set_xlabel("distance along fiber (m)")
    ax.set_ylabel("time (s)")
    ax.set_title("waterfall")

    if records:
        for row in summarize_events(records):
            width = row["x_end_m"] - row["x_start_m"]
            height = row["t_end_s"] - row["t_start_s"]
            ax.add_patch(
                mpatches.Rectangle(
                    (row["x_start_m"], row["t_start_s"]),
                    width,
                    height,
                    fill=False,
                    edgecolor="cyan",
                    linewidth=1.2,
                )
            )
            tag = f"#{row['id']}"
            if row["label"]:
                tag += f" {row['label']}"
            ax.annotate(
                tag,
                (row["x_start_m"], row["t_start_s"]),
                color="cyan",
                fontsize=8,
                xytext=(2, -2),
                textcoords="offset points",
                va="top",
            )

    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def build_report(potd_path, out_dir, records: list[EventRecord] | None = None) -> dict:
    """Render everything; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    figure_path = out / "waterfall.png"
    csv_path = out / "events.csv"
    render_waterfall(potd_path, figure_path, records)
    write_event_csv(csv_path, summarize_events(records or []))
    return {"waterfall": str(figure_path), "events_csv": str(csv_path)}
