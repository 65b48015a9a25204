"""Feature vector definition and the order hash that guards it.

The classifier is only valid for the exact feature order it was trained
on, so the order is pinned here in one place and fingerprinted with a
64-bit FNV-1a hash over the comma-joined names. Models store the hash
and refuse vectors that do not match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEATURE_NAMES: tuple[str, ...] = (
    "rms",
    "crest_factor",
    "kurtosis",
    "zero_crossing_rate",
    "spectral_centroid_hz",
    "spectral_bandwidth_hz",
    "spectral_flatness",
    "dominant_freq_hz",
    "band_ratio_low",
    "band_ratio_mid",
    "band_ratio_high",
    "spatial_extent_m",
    "abs_velocity_mps",
)

N_FEATURES = len(FEATURE_NAMES)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(text: str) -> str:
    """64-bit FNV-1a of the UTF-8 bytes, rendered as 16 hex digits."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return format(h, "016x")


FEATURE_ORDER_HASH = fnv1a64(",".join(FEATURE_NAMES))


@dataclass(frozen=True)
class FeatureVector:
    rms: float
    crest_factor: float
    kurtosis: float
    zero_crossing_rate: float
    spectral_centroid_hz: float
    spectral_bandwidth_hz: float
    spectral_flatness: float
    dominant_freq_hz: float
    band_ratio_low: float
    band_ratio_mid: float
    band_ratio_high: float
    spatial_extent_m: float
    abs_velocity_mps: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)

    def as_list(self) -> list[float]:
        return [float(getattr(self, name)) for name in FEATURE_NAMES]

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got shape {arr.shape}")
        return cls(**{name: float(v) for name, v in zip(FEATURE_NAMES, arr)})
