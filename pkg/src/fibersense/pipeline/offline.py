"""Batch utilities: record scenarios to disk and mine feature datasets
from recordings with label sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fibersense.detect import StreamDetector
from fibersense.features import extract_features, patch_from_track
from fibersense.features.dataset import DatasetRow
from fibersense.pipeline.config import PipelineConfig
from fibersense.pipeline.engine import quantize_block
from fibersense.pipeline.potd import PotdReader, PotdWriter
from fibersense.sim import LabelSpan, WaterfallBlock, build_layout, run_scenario


def record_scenario(script, potd_path, layout=None, block_size: int = 100,
                    sim_config=None) -> list[LabelSpan]:
    """Run a scenario and write its float32 waterfall; returns labels."""
    layout = layout if layout is not None else build_layout()
    with PotdWriter(
        potd_path,
        n_bins=layout.n_bins,
        bin_size_m=layout.bin_size_m,
        pulse_rate_hz=layout.pulse_rate_hz,
    ) as writer:
        labels = run_scenario(
            script,
            lambda block: writer.write_traces(quantize_block(block.samples)),
            layout=layout,
            block_size=block_size,
            sim_config=sim_config,
        )
    return labels


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for span in labels:
            fh.write(json.dumps(span.to_dict()) + "\n")


def read_labels(path) -> list[LabelSpan]:
    spans = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            spans.append(LabelSpan.from_dict(json.loads(line)))
    return spans


def _matching_label(labels, t_s: float, x_m: float):
    hits = [
        span.label
        for span in labels
        if span.t_start_s <= t_s <= span.t_end_s and span.x_start_m <= x_m < span.x_end_m
    ]
    return hits[0] if len(hits) == 1 else None


def extract_dataset(config: PipelineConfig, potd_path, labels) -> list[DatasetRow]:
    """Feature rows from every confirmed track at the classification
    cadence, labeled by the ground-truth span containing the track."""
    config.validate()
    rows: list[DatasetRow] = []
    last_extracted: dict[int, float] = {}
    with PotdReader(potd_path) as reader:
        hdr = reader.header
        layout = build_layout(
            n_bins=hdr.n_bins, bin_size_m=hdr.bin_size_m, pulse_rate_hz=hdr.pulse_rate_hz
        )
        detector = StreamDetector(layout, config.detector)
        window_traces = int(round(config.feature_window_s * layout.pulse_rate_hz))
        for start, samples in reader.blocks(config.block_size_traces):
            t0 = start / hdr.pulse_rate_hz
            arr = np.asarray(samples, dtype=np.float64)
            detector.process_block(WaterfallBlock(t0, arr.shape[0], arr.shape[1], arr))
            t_end = t0 + arr.shape[0] / hdr.pulse_rate_hz
            for track in detector.tracker.confirmed_tracks():
                last = last_extracted.get(track.id)
                if last is not None and t_end - last < config.classify_interval_s - 1e-9:
                    continue
                if len(track.patch_buffer) < window_traces:
                    continue
                patch = patch_from_track(track, layout.pulse_rate_hz, config.feature_window_s)
                vector = extract_features(
                    patch, track, include_velocity=config.include_velocity
                )
                label = _matching_label(labels, t_end, track.last_centroid_m)
                last_extracted[track.id] = t_end
                if label is None:
                    continue
                rows.append(
                    DatasetRow(
                        features=tuple(vector.as_list()),
                        label=label,
                        source_event_id=track.id,
                        t_s=t_end,
                    )
                )
    return rows
