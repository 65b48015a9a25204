"""Fixed-order statistical feature extraction from event patches."""

from fibersense.features.dataset import DatasetRow, append_rows, read_dataset, write_dataset
from fibersense.features.extract import (
    FEATURE_WINDOW_S,
    EventPatch,
    band_ratios,
    extract_features,
    patch_from_track,
    spectral_stats,
    time_stats,
)
from fibersense.features.vector import FEATURE_NAMES, FEATURE_ORDER_HASH, FeatureVector, fnv1a64

__all__ = [
    "FEATURE_NAMES",
    "FEATURE_ORDER_HASH",
    "FEATURE_WINDOW_S",
    "DatasetRow",
    "EventPatch",
    "FeatureVector",
    "append_rows",
    "band_ratios",
    "extract_features",
    "fnv1a64",
    "patch_from_track",
    "read_dataset",
    "spectral_stats",
    "time_stats",
    "write_dataset",
]
