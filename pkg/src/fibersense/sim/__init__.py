from .block import WaterfallBlock
from .layout import FiberLayout, Segment, build_layout, DEFAULT_SEGMENT_FRACTIONS
from .simulator import SimConfig, Simulator
from .sources import (
    CarState,
    FanState,
    SetAudio,
    SetFan,
    CarCommand,
    SourceState,
    SpeakerState,
    MAX_CAR_SPEED_MPS,
)
from .scenario import LabelSpan, ScenarioScript, derive_labels, run_scenario

__all__ = [
    "WaterfallBlock",
    "FiberLayout",
    "Segment",
    "build_layout",
    "DEFAULT_SEGMENT_FRACTIONS",
    "SimConfig",
    "Simulator",
    "SourceState",
    "SpeakerState",
    "FanState",
    "CarState",
    "SetFan",
    "SetAudio",
    "CarCommand",
    "MAX_CAR_SPEED_MPS",
    "ScenarioScript",
    "LabelSpan",
    "derive_labels",
    "run_scenario",
]
