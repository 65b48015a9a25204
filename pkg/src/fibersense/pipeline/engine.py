"""Pipeline orchestration.

One BlockProcessor implements the full per-block flow (detect,
classify on cadence, persist, tile) and is shared verbatim by the
offline batch path and the threaded live service, which is what makes
record-then-replay produce the same event log as the original live
run: both paths feed the processor the same float32-quantized trace
data in the same block boundaries.

Live topology, three stages joined by bounded queues:

    source (simulator / replay reader, paced)
      -> block queue (blocks the source when full; detection is lossless)
    processor (single-writer detector state)
      -> per-subscriber buffers (lossy for tiles, never for events)

Control commands enter through a separate queue that the source thread
drains between blocks, so a command's effect always starts on a block
boundary and its acknowledgment carries that boundary time.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import deque

import numpy as np

from fibersense.classify import predict, smooth_labels
from fibersense.classify.tree import TreeModel
from fibersense.detect import StreamDetector
from fibersense.errors import ModeError, ModelError, StreamError
from fibersense.features import extract_features, patch_from_track
from fibersense.features.vector import FEATURE_ORDER_HASH
from fibersense.pipeline.config import PipelineConfig
from fibersense.pipeline.events import EventLog, EventRecord
from fibersense.pipeline.potd import PotdReader, PotdWriter
from fibersense.pipeline.tiles import TilePacket, make_tile
from fibersense.sim import SimConfig, Simulator, WaterfallBlock, build_layout

UNCERTAIN_LABEL = "uncertain"
_BLOCK_QUEUE_DEPTH = 8
SUBSCRIBER_BUFFER_MESSAGES = 64


def quantize_block(samples) -> np.ndarray:
    """Float32 is the wire and disk precision; quantizing at the source
    boundary makes live processing and replay see identical bits."""
    return np.asarray(samples, dtype=np.float32)


class BlockProcessor:
    """Everything that happens to one block, in deterministic order."""

    def __init__(self, config: PipelineConfig, layout, model: TreeModel | None,
                 event_log: EventLog):
        if model is not None and model.feature_order_hash != FEATURE_ORDER_HASH:
            raise ModelError(
                "model feature order hash does not match this build "
                f"({model.feature_order_hash} != {FEATURE_ORDER_HASH})"
            )
        self.config = config
        self.layout = layout
        self.model = model
        self.event_log = event_log
        self.detector = StreamDetector(layout, config.detector)
        self.blocks_processed = 0
        self.last_t_s = 0.0
        self._record_seq = 0
        self._class_state: dict[int, list] = {}
        self._last_classified: dict[int, float] = {}
        self._live_latest: dict[int, EventRecord] = {}

    def _classify_tracks(self, t_end: float) -> None:
        window_traces = int(round(self.config.feature_window_s * self.layout.pulse_rate_hz))
        for track in self.detector.tracker.confirmed_tracks():
            last = self._last_classified.get(track.id)
            if last is not None and t_end - last < self.config.classify_interval_s - 1e-9:
                continue
            if len(track.patch_buffer) < window_traces:
                continue
            patch = patch_from_track(
                track, self.layout.pulse_rate_hz, self.config.feature_window_s
            )
            vector = extract_features(
                patch, track, include_velocity=self.config.include_velocity
            )
            label, confidence, _ = predict(self.model, vector.as_list())
            if confidence < self.config.confidence_threshold:
                label = UNCERTAIN_LABEL
            self._class_state.setdefault(track.id, []).append((label, confidence))
            self._last_classified[track.id] = t_end

    def _to_record(self, note) -> EventRecord:
        history = self._class_state.get(note.id)
        label, confidence, smoothed = None, None, None
        if history:
            label, confidence = history[-1]
            smoothed = smooth_labels(history)
        record = EventRecord(
            event=note.event,
            id=note.id,
            t_s=note.t_s,
            x_start_m=note.x_start_m,
            x_end_m=note.x_end_m,
            centroid_m=note.centroid_m,
            motion=note.motion,
            velocity_mps=note.velocity_mps,
            label=label,
            confidence=confidence,
            smoothed_label=smoothed,
            record_seq=self._record_seq,
        )
        self._record_seq += 1
        if note.event == "ended":
            self._class_state.pop(note.id, None)
            self._last_classified.pop(note.id, None)
            self._live_latest.pop(note.id, None)
        else:
            self._live_latest[note.id] = record
        self.event_log.append(record)
        return record

    def process(self, t0_s: float, samples) -> tuple[list[EventRecord], TilePacket | None]:
        arr = np.asarray(samples, dtype=np.float64)
        block = WaterfallBlock(t0_s, arr.shape[0], arr.shape[1], arr)
        notes = self.detector.process_block(block)
        t_end = t0_s + arr.shape[0] / self.layout.pulse_rate_hz
        if self.model is not None:
            self._classify_tracks(t_end)
        records = [self._to_record(n) for n in notes]
        tile = make_tile(
            arr,
            t0_s,
            self.layout.pulse_rate_hz,
            self.layout.bin_size_m,
            self.config.downsample.time_factor,
            self.config.downsample.space_factor,
        )
        self.blocks_processed += 1
        self.last_t_s = t_end
        return records, tile

    def finalize(self) -> list[EventRecord]:
        notes = self.detector.finalize(self.last_t_s)
        return [self._to_record(n) for n in notes]

    def live_event_records(self) -> list[EventRecord]:
        return [self._live_latest[k] for k in sorted(self._live_latest)]


def _layout_from_config(config: PipelineConfig):
    return build_layout(
        n_bins=config.layout.n_bins,
        bin_size_m=config.layout.bin_size_m,
        pulse_rate_hz=config.layout.pulse_rate_hz,
    )


def run_offline(config: PipelineConfig, potd_path, model: TreeModel | None = None,
                event_log: EventLog | None = None, on_tile=None) -> list[EventRecord]:
    """Process a recording start to finish, as fast as the CPU allows."""
    config.validate()
    log = event_log if event_log is not None else EventLog(None)
    records: list[EventRecord] = []
    with PotdReader(potd_path) as reader:
        hdr = reader.header
        layout = build_layout(
            n_bins=hdr.n_bins, bin_size_m=hdr.bin_size_m, pulse_rate_hz=hdr.pulse_rate_hz
        )
        processor = BlockProcessor(config, layout, model, log)
        for start, samples in reader.blocks(config.block_size_traces):
            recs, tile = processor.process(start / hdr.pulse_rate_hz, samples)
            records.extend(recs)
            if on_tile is not None and tile is not None:
                on_tile(tile)
        records.extend(processor.finalize())
    return records


class SubscriberBuffer:
    """Bounded fan-out buffer: tiles are droppable, events are not."""

    def __init__(self, maxlen: int = SUBSCRIBER_BUFFER_MESSAGES):
        self.maxlen = maxlen
        self._items: deque = deque()
        self._cond = threading.Condition()
        self.overflowed = False

    def publish(self, kind: str, payload: dict) -> None:
        with self._cond:
            if self.overflowed:
                return
            self._items.append((kind, payload))
            while len(self._items) > self.maxlen:
                for i, (k, _) in enumerate(self._items):
                    if k == "tile":
                        del self._items[i]
                        break
                else:
                    self.overflowed = True
                    self._items.clear()
                    break
            self._cond.notify()

    def get(self, timeout: float = 0.25):
        """Next (kind, payload), or None on timeout/overflow."""
        with self._cond:
            if not self._items and not self.overflowed:
                self._cond.wait(timeout)
            if self._items:
                return self._items.popleft()
            return None


class _LatencyWindow:
    """Rolling percentile tracker over the most recent period."""

    def __init__(self, horizon_s: float = 60.0):
        self.horizon_s = horizon_s
        self._samples: deque = deque()

    def add(self, value_ms: float) -> None:
        now = time.monotonic()
        self._samples.append((now, value_ms))
        cutoff = now - self.horizon_s
        while self._samples and self._samples[0][0] < cutoff:
            self._samples.popleft()

    def percentiles(self) -> dict:
        values = sorted(v for _, v in self._samples)
        if not values:
            return {"p50": None, "p95": None, "count": 0}
        def pct(q):
            idx = min(len(values) - 1, int(round(q * (len(values) - 1))))
            return values[idx]
        return {"p50": pct(0.50), "p95": pct(0.95), "count": len(values)}


class LivePipeline:
    """Threaded service core driving either a simulator or a replay file."""

    def __init__(self, config: PipelineConfig, model: TreeModel | None = None):
        config.validate()
        self.config = config
        self.mode = "replay" if config.replay_path else "live"
        self.event_log = EventLog(config.event_log_path)
        if self.mode == "replay":
            self._reader = PotdReader(config.replay_path)
            hdr = self._reader.header
            layout = build_layout(
                n_bins=hdr.n_bins, bin_size_m=hdr.bin_size_m, pulse_rate_hz=hdr.pulse_rate_hz
            )
        else:
            self._reader = None
            layout = _layout_from_config(config)
        self.layout = layout
        self.processor = BlockProcessor(config, layout, model, self.event_log)
        self._blocks: queue.Queue = queue.Queue(maxsize=_BLOCK_QUEUE_DEPTH)
        self._commands: queue.Queue = queue.Queue()
        self._subscribers: list[SubscriberBuffer] = []
        self._pub_lock = threading.Lock()
        self._stop = threading.Event()
        self._source_done = threading.Event()
        self.finished = threading.Event()
        self._threads: list[threading.Thread] = []
        self.block_latency = _LatencyWindow()
        self.notify_latency = _LatencyWindow()
        self._writer: PotdWriter | None = None
        self._sim: Simulator | None = None

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        source = self._replay_source if self.mode == "replay" else self._sim_source
        self._threads = [
            threading.Thread(target=source, name="fs-source", daemon=True),
            threading.Thread(target=self._process_loop, name="fs-process", daemon=True),
        ]
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=5.0)
        self.event_log.close()
        if self._writer is not None:
            self._writer.close()
        if self._reader is not None:
            self._reader.close()

    # -- source threads ---------------------------------------------------

    def _apply_pending_commands(self) -> None:
        while True:
            try:
                cmd, box = self._commands.get_nowait()
            except queue.Empty:
                return
            try:
                self._sim.apply_control(cmd)
                box["applied_t_s"] = self._sim.trace_index / self.layout.pulse_rate_hz
            except ValueError as exc:
                box["error"] = str(exc)
            finally:
                box["done"].set()

    def _sim_source(self) -> None:
        self._sim = Simulator(
            SimConfig(layout=self.layout, seed=self.config.seed)
        )
        if self.config.record_path:
            self._writer = PotdWriter(
                self.config.record_path,
                n_bins=self.layout.n_bins,
                bin_size_m=self.layout.bin_size_m,
                pulse_rate_hz=self.layout.pulse_rate_hz,
            )
        period = self.config.block_size_traces / self.layout.pulse_rate_hz
        next_due = time.monotonic() + period
        while not self._stop.is_set():
            self._apply_pending_commands()
            block = self._sim.synthesize_block(self.config.block_size_traces)
            quantized = quantize_block(block.samples)
            if self._writer is not None:
                self._writer.write_traces(quantized)
            now = time.monotonic()
            if next_due > now:
                time.sleep(next_due - now)
            next_due += period
            self._put_block(block.t0_s, quantized)
        self._source_done.set()

    def _replay_source(self) -> None:
        rate = self.layout.pulse_rate_hz
        speed = self.config.replay_speed
        for start, samples in self._reader.blocks(self.config.block_size_traces):
            if self._stop.is_set():
                break
            if speed > 0:
                time.sleep(samples.shape[0] / rate / speed)
            self._put_block(start / rate, samples)
        self._source_done.set()

    def _put_block(self, t0_s: float, samples) -> None:
        item = (time.monotonic(), t0_s, samples)
        while not self._stop.is_set():
            try:
                self._blocks.put(item, timeout=0.2)
                return
            except queue.Full:
                continue

    # -- processing -------------------------------------------------------

    def _process_loop(self) -> None:
        try:
            while True:
                try:
                    available, t0_s, samples = self._blocks.get(timeout=0.2)
                except queue.Empty:
                    if self._source_done.is_set() or self._stop.is_set():
                        break
                    continue
                records, tile = self.processor.process(t0_s, samples)
                self._publish(records, tile)
                elapsed_ms = (time.monotonic() - available) * 1000.0
                self.block_latency.add(elapsed_ms)
                if records:
                    self.notify_latency.add(elapsed_ms)
            for record in self.processor.finalize():
                self._publish([record], None)
        finally:
            self.finished.set()

    def _publish(self, records, tile) -> None:
        with self._pub_lock:
            for buf in self._subscribers:
                for record in records:
                    buf.publish("event", record.to_dict())
                if tile is not None:
                    buf.publish("tile", tile.to_dict())

    # -- client surface ----------------------------------------------------

    def subscribe(self) -> tuple[dict, SubscriberBuffer]:
        """Register a subscriber; returns (snapshot, buffer) atomically
        with respect to publishing, so no record is lost or duplicated."""
        buf = SubscriberBuffer()
        with self._pub_lock:
            snapshot = {
                "type": "snapshot",
                "t_s": self.processor.last_t_s,
                "mode": self.mode,
                "config": self.config.to_dict(),
                "events": [r.to_dict() for r in self.processor.live_event_records()],
            }
            self._subscribers.append(buf)
        return snapshot, buf

    def unsubscribe(self, buf: SubscriberBuffer) -> None:
        with self._pub_lock:
            if buf in self._subscribers:
                self._subscribers.remove(buf)

    def submit_command(self, cmd, timeout: float = 2.0) -> float:
        """Queue a control command; returns the time it takes effect."""
        if self.mode != "live":
            raise ModeError("control commands are only accepted in live mode")
        box = {"done": threading.Event()}
        self._commands.put((cmd, box))
        if not box["done"].wait(timeout):
            raise StreamError("source thread did not acknowledge the command")
        if "error" in box:
            raise ValueError(box["error"])
        return box["applied_t_s"]

    def status(self) -> dict:
        return {
            "mode": self.mode,
            "running": not self.finished.is_set(),
            "t_s": self.processor.last_t_s,
            "blocks_processed": self.processor.blocks_processed,
            "live_events": len(self.processor.live_event_records()),
            "model_loaded": self.processor.model is not None,
            "recording": self.config.record_path,
            "block_latency_ms": self.block_latency.percentiles(),
            "notify_latency_ms": self.notify_latency.percentiles(),
            "subscribers": len(self._subscribers),
        }
