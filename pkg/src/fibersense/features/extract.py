"""Statistics computed over an event's aggregated time series.

Zero-signal conventions, applied consistently everywhere:

* time stats of an all-zero signal are all zero;
* spectral stats of a signal with no positive-frequency power are
  (centroid 0, bandwidth 0, flatness 1, dominant 0);
* band ratios of such a signal are all zero.

A constant nonzero signal keeps its raw rms, reports crest factor 1,
and has zero crossings and excess kurtosis of 0 because the
mean-removed residual is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fibersense.errors import InsufficientDataError
from fibersense.features.vector import FeatureVector

FEATURE_WINDOW_S = 1.0
MIN_SPECTRAL_SAMPLES = 256
_LOG_FLOOR = 1e-20

BAND_LOW_HZ = (1.0, 20.0)
BAND_MID_HZ = (20.0, 100.0)
BAND_HIGH_START_HZ = 100.0


@dataclass(frozen=True)
class EventPatch:
    """Per-trace average of an event's bins over a recent time window."""

    t0_s: float
    duration_s: float
    x_start_m: float
    x_end_m: float
    agg_signal: np.ndarray
    pulse_rate_hz: float

    def __post_init__(self):
        sig = np.asarray(self.agg_signal, dtype=np.float64)
        if sig.ndim != 1:
            raise ValueError("agg_signal must be one-dimensional")
        if not np.all(np.isfinite(sig)):
            raise ValueError("agg_signal contains non-finite values")
        object.__setattr__(self, "agg_signal", sig)


def time_stats(signal, rate_hz: float) -> tuple[float, float, float, float]:
    """Return (rms, crest_factor, excess_kurtosis, zero_crossing_rate).

    rms and crest are computed on the raw signal; kurtosis and the
    crossing rate on the mean-removed residual. The crossing rate is
    sign changes per second, ignoring exact zeros.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size < 2:
        raise InsufficientDataError("time stats need at least 2 samples")

    rms = float(np.sqrt(np.mean(x**2)))
    if rms == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    crest = float(np.max(np.abs(x)) / rms)

    y = x - x.mean()
    m2 = np.mean(y**2)
    kurtosis = float(np.mean(y**4) / m2**2 - 3.0) if m2 > 0 else 0.0

    signs = np.sign(y)
    signs = signs[signs != 0]
    crossings = int(np.count_nonzero(np.diff(signs))) if signs.size > 1 else 0
    zcr = crossings / (x.size / rate_hz)
    return rms, crest, kurtosis, float(zcr)


def _positive_spectrum(signal, rate_hz: float):
    x = np.asarray(signal, dtype=np.float64)
    y = x - x.mean()
    power = np.abs(np.fft.rfft(y)[1:]) ** 2
    freqs = np.fft.rfftfreq(x.size, d=1.0 / rate_hz)[1:]
    return freqs, power


def spectral_stats(signal, rate_hz: float) -> tuple[float, float, float, float]:
    """Return (centroid_hz, bandwidth_hz, flatness, dominant_hz).

    The power spectrum is taken over positive frequencies of the
    mean-removed signal. Flatness is the geometric over arithmetic
    mean of the power bins, floored at 1e-20 inside the log.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size < MIN_SPECTRAL_SAMPLES:
        raise InsufficientDataError(
            f"spectral stats need at least {MIN_SPECTRAL_SAMPLES} samples, got {x.size}"
        )
    freqs, power = _positive_spectrum(x, rate_hz)
    total = power.sum()
    if total == 0.0:
        return 0.0, 0.0, 1.0, 0.0

    centroid = float(np.sum(freqs * power) / total)
    bandwidth = float(np.sqrt(np.sum((freqs - centroid) ** 2 * power) / total))
    geometric = np.exp(np.mean(np.log(power + _LOG_FLOOR)))
    flatness = float(geometric / np.mean(power))
    dominant = float(freqs[np.argmax(power)])
    return centroid, bandwidth, flatness, dominant


def band_ratios(signal, rate_hz: float) -> tuple[float, float, float]:
    """Energy fraction in 1-20 Hz, 20-100 Hz, and 100 Hz-Nyquist bands.

    Fractions are relative to total positive-frequency power, so they
    each lie in [0, 1] and sum to at most 1 (sub-1 Hz power belongs to
    no band).
    """
    freqs, power = _positive_spectrum(signal, rate_hz)
    total = power.sum()
    if total == 0.0:
        return 0.0, 0.0, 0.0
    low = power[(freqs >= BAND_LOW_HZ[0]) & (freqs < BAND_LOW_HZ[1])].sum() / total
    mid = power[(freqs >= BAND_MID_HZ[0]) & (freqs < BAND_MID_HZ[1])].sum() / total
    high = power[freqs >= BAND_HIGH_START_HZ].sum() / total
    return float(low), float(mid), float(high)


def patch_from_track(track, pulse_rate_hz: float, window_s: float = FEATURE_WINDOW_S) -> EventPatch:
    """Build a patch from the most recent window of a track's ring buffer."""
    n = int(round(window_s * pulse_rate_hz))
    buffered = len(track.patch_buffer)
    if buffered < n:
        raise InsufficientDataError(
            f"track {track.id} has {buffered / pulse_rate_hz:.2f} s buffered, "
            f"needs {window_s:.2f} s"
        )
    signal = np.fromiter(
        (track.patch_buffer[i] for i in range(buffered - n, buffered)),
        dtype=np.float64,
        count=n,
    )
    x0, x1 = track.last_span_m
    return EventPatch(
        t0_s=track.last_seen_t_s - window_s,
        duration_s=window_s,
        x_start_m=x0,
        x_end_m=x1,
        agg_signal=signal,
        pulse_rate_hz=pulse_rate_hz,
    )


def _spatial_extent(patch: EventPatch, track) -> float:
    t_lo = patch.t0_s - 1e-9
    t_hi = patch.t0_s + patch.duration_s + 1e-9
    widths = [x1 - x0 for t, x0, x1 in track.span_history if t_lo <= t <= t_hi]
    if not widths:
        return patch.x_end_m - patch.x_start_m
    return float(max(widths))


def extract_features(patch: EventPatch, track, include_velocity: bool = True) -> FeatureVector:
    """Compose the full fixed-order vector for one patch of one track.

    With include_velocity False the velocity entry is zeroed, keeping
    the vector shape and order unchanged so the same models load.
    """
    if patch.duration_s + 1e-9 < FEATURE_WINDOW_S:
        raise InsufficientDataError(
            f"patch covers {patch.duration_s:.2f} s, needs {FEATURE_WINDOW_S:.2f} s"
        )
    rms, crest, kurt, zcr = time_stats(patch.agg_signal, patch.pulse_rate_hz)
    centroid, bandwidth, flatness, dominant = spectral_stats(patch.agg_signal, patch.pulse_rate_hz)
    low, mid, high = band_ratios(patch.agg_signal, patch.pulse_rate_hz)
    velocity = abs(track.velocity_mps) if include_velocity else 0.0
    return FeatureVector(
        rms=rms,
        crest_factor=crest,
        kurtosis=kurt,
        zero_crossing_rate=zcr,
        spectral_centroid_hz=centroid,
        spectral_bandwidth_hz=bandwidth,
        spectral_flatness=flatness,
        dominant_freq_hz=dominant,
        band_ratio_low=low,
        band_ratio_mid=mid,
        band_ratio_high=high,
        spatial_extent_m=_spatial_extent(patch, track),
        abs_velocity_mps=velocity,
    )
