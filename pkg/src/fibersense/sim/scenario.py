"""Scripted scenarios: timed command sequences with derived ground truth."""

import json
import math
from dataclasses import dataclass, field

from ..errors import ScenarioError
from .layout import build_layout
from .simulator import SimConfig, Simulator
from .sources import CarCommand, SetAudio, SetFan, command_from_dict, command_to_dict

# Ground-truth class names, one per steerable source.
CLASS_ACOUSTIC = "acoustic"
CLASS_WIND = "wind"
CLASS_VEHICLE = "vehicle"
CLASS_NAMES = (CLASS_ACOUSTIC, CLASS_WIND, CLASS_VEHICLE)


@dataclass
class LabelSpan:
    t_start_s: float
    t_end_s: float
    x_start_m: float
    x_end_m: float
    label: str

    def to_dict(self):
        return {
            "t_start_s": self.t_start_s,
            "t_end_s": self.t_end_s,
            "x_start_m": self.x_start_m,
            "x_end_m": self.x_end_m,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            t_start_s=float(obj["t_start_s"]),
            t_end_s=float(obj["t_end_s"]),
            x_start_m=float(obj["x_start_m"]),
            x_end_m=float(obj["x_end_m"]),
            label=str(obj["label"]),
        )


@dataclass
class ScenarioScript:
    duration_s: float
    seed: int = 12345
    timeline: list = field(default_factory=list)  # [(time_s, command), ...]

    def validate(self):
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        prev = 0.0
        for time_s, _cmd in self.timeline:
            if time_s < 0:
                raise ScenarioError(f"command time {time_s} is negative")
            if time_s < prev:
                raise ScenarioError(f"timeline not sorted at t={time_s}")
            prev = time_s

    def to_json(self):
        return json.dumps(
            {
                "duration_s": self.duration_s,
                "seed": self.seed,
                "timeline": [[t, command_to_dict(c)] for t, c in self.timeline],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
            script = cls(
                duration_s=float(obj["duration_s"]),
                seed=int(obj.get("seed", 12345)),
                timeline=[
                    (float(t), command_from_dict(c)) for t, c in obj.get("timeline", [])
                ],
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"bad scenario script: {exc}") from exc
        script.validate()
        return script


def _effective_block(time_s, pulse_rate_hz, block_size):
    """Index of the first block starting at or after time_s.

    Commands take effect at block boundaries, so this is where a command
    requested at time_s actually lands.  A small tolerance absorbs float
    noise in times that are meant to hit a boundary exactly.
    """
    return max(0, math.ceil(time_s * pulse_rate_hz / block_size - 1e-9))


def derive_labels(script, layout=None, block_size=100):
    """Ground-truth label spans implied by the script's command timeline.

    Each interval during which a source is on yields one span covering that
    source's zone, with times aligned to the block boundaries at which the
    commands actually take effect.
    """
    script.validate()
    layout = layout or build_layout()
    fs = layout.pulse_rate_hz
    total_traces = int(round(script.duration_s * fs))
    end_s = total_traces / fs
    block_dt = block_size / fs

    zones = {
        "speaker": (layout.acoustic_zone, CLASS_ACOUSTIC),
        "fan": (layout.aerial_zone, CLASS_WIND),
        "car": (layout.road_zone, CLASS_VEHICLE),
    }
    on_since = {}
    spans = []

    def switch(source, now_on, t_eff):
        if now_on and source not in on_since:
            on_since[source] = t_eff
        elif not now_on and source in on_since:
            (lo, hi), label = zones[source]
            spans.append(LabelSpan(on_since.pop(source), t_eff, lo, hi, label))

    for time_s, cmd in script.timeline:
        t_eff = _effective_block(time_s, fs, block_size) * block_dt
        if t_eff >= end_s:
            continue
        if isinstance(cmd, SetFan):
            switch("fan", cmd.on, t_eff)
        elif isinstance(cmd, SetAudio):
            switch("speaker", cmd.on, t_eff)
        elif isinstance(cmd, CarCommand):
            switch("car", cmd.action == "start", t_eff)

    for source in list(on_since):
        switch(source, False, end_s)

    spans.sort(key=lambda s: (s.t_start_s, s.x_start_m))
    return spans


def run_scenario(script, sink, layout=None, block_size=100, sim_config=None):
    """Execute the script against a fresh simulator, emitting blocks to sink.

    ``sink`` is called once per synthesized WaterfallBlock, in order.  Returns
    the ground-truth label spans aligned to the emitted timeline.
    """
    script.validate()
    layout = layout or build_layout()
    if sim_config is None:
        sim_config = SimConfig(layout=layout, seed=script.seed)
    sim = Simulator(sim_config)

    fs = layout.pulse_rate_hz
    total_traces = int(round(script.duration_s * fs))
    n_blocks = math.ceil(total_traces / block_size)

    pending = [
        (_effective_block(t, fs, block_size), i, cmd)
        for i, (t, cmd) in enumerate(script.timeline)
    ]
    pending.sort(key=lambda item: (item[0], item[1]))
    cursor = 0

    for k in range(n_blocks):
        while cursor < len(pending) and pending[cursor][0] <= k:
            _, _, cmd = pending[cursor]
            try:
                sim.apply_control(cmd)
            except ValueError as exc:
                raise ScenarioError(f"bad command in timeline: {exc}") from exc
            cursor += 1
        n = min(block_size, total_traces - k * block_size)
        sink(sim.synthesize_block(n))

    return derive_labels(script, layout=layout, block_size=block_size)
