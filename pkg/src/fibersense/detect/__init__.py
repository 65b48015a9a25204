from .background import BackgroundModel, apply_hysteresis, block_energy
from .clustering import SpatialCluster, segment_active_bins
from .tracker import EventTrack, Notification, Tracker, estimate_velocity, ls_velocity
from .detector import DetectorConfig, StreamDetector

__all__ = [
    "BackgroundModel",
    "block_energy",
    "apply_hysteresis",
    "SpatialCluster",
    "segment_active_bins",
    "EventTrack",
    "Notification",
    "Tracker",
    "estimate_velocity",
    "ls_velocity",
    "DetectorConfig",
    "StreamDetector",
]
