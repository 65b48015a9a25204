"""Fiber layout: spatial binning and named segments along the cable."""

from dataclasses import dataclass

import numpy as np

from ..errors import LayoutError

LEAD_IN = "lead_in"
ACOUSTIC_ZONE = "acoustic_zone"
AERIAL_ZONE = "aerial_zone"
ROAD_ZONE = "road_zone"
TAIL = "tail"

# Zones that must appear exactly once in a valid layout.
REQUIRED_ZONES = (ACOUSTIC_ZONE, AERIAL_ZONE, ROAD_ZONE)

# Default segmentation, as fractions of total fiber length, in order.
DEFAULT_SEGMENT_FRACTIONS = (
    (LEAD_IN, 0.0, 0.40),
    (ACOUSTIC_ZONE, 0.40, 0.55),
    (AERIAL_ZONE, 0.55, 0.70),
    (ROAD_ZONE, 0.70, 0.85),
    (TAIL, 0.85, 1.00),
)


@dataclass(frozen=True)
class Segment:
    start_m: float
    end_m: float
    kind: str


@dataclass(frozen=True)
class FiberLayout:
    """Spatial description of the sensed fiber.

    Bins are uniform; bin i covers [i*bin_size_m, (i+1)*bin_size_m) and its
    center sits at (i + 0.5)*bin_size_m.
    """

    n_bins: int
    bin_size_m: float
    pulse_rate_hz: float
    segments: tuple

    @property
    def length_m(self):
        return self.n_bins * self.bin_size_m

    @property
    def nyquist_hz(self):
        return self.pulse_rate_hz / 2.0

    def bin_centers(self):
        return (np.arange(self.n_bins) + 0.5) * self.bin_size_m

    def zone(self, kind):
        """Return (start_m, end_m) of the unique segment of the given kind."""
        for seg in self.segments:
            if seg.kind == kind:
                return seg.start_m, seg.end_m
        raise LayoutError(f"layout has no {kind!r} segment")

    @property
    def acoustic_zone(self):
        return self.zone(ACOUSTIC_ZONE)

    @property
    def aerial_zone(self):
        return self.zone(AERIAL_ZONE)

    @property
    def road_zone(self):
        return self.zone(ROAD_ZONE)

    def bin_of(self, x_m):
        """Index of the bin containing position x_m (clipped to range)."""
        i = int(x_m / self.bin_size_m)
        return min(max(i, 0), self.n_bins - 1)


def build_layout(n_bins=1000, bin_size_m=1.0, pulse_rate_hz=1000.0, segments=None):
    """Construct and validate a FiberLayout.

    When ``segments`` is omitted the default five-segment split is applied
    proportionally to the fiber length.  Explicit segments are given as
    (start_m, end_m, kind) triples covering [0, length) contiguously, with
    each of the acoustic, aerial and road zones present exactly once.
    """
    if n_bins <= 0:
        raise LayoutError("n_bins must be positive")
    if bin_size_m <= 0:
        raise LayoutError("bin_size_m must be positive")
    if pulse_rate_hz <= 0:
        raise LayoutError("pulse_rate_hz must be positive")

    length = n_bins * bin_size_m
    if segments is None:
        segs = [
            Segment(round(lo * length, 9), round(hi * length, 9), kind)
            for kind, lo, hi in DEFAULT_SEGMENT_FRACTIONS
        ]
    else:
        segs = [Segment(float(s), float(e), str(k)) for s, e, k in segments]

    tol = 1e-9 * max(length, 1.0)
    cursor = 0.0
    for seg in segs:
        if seg.end_m <= seg.start_m:
            raise LayoutError(f"segment {seg.kind!r} has non-positive extent")
        if seg.start_m > cursor + tol:
            raise LayoutError(f"gap before segment {seg.kind!r} at {seg.start_m} m")
        if seg.start_m < cursor - tol:
            raise LayoutError(f"segment {seg.kind!r} overlaps previous at {seg.start_m} m")
        cursor = seg.end_m
    if abs(cursor - length) > tol:
        raise LayoutError(f"segments cover [0, {cursor}) but fiber is {length} m")

    for kind in REQUIRED_ZONES:
        count = sum(1 for s in segs if s.kind == kind)
        if count != 1:
            raise LayoutError(f"layout needs exactly one {kind!r} segment, found {count}")

    return FiberLayout(
        n_bins=int(n_bins),
        bin_size_m=float(bin_size_m),
        pulse_rate_hz=float(pulse_rate_hz),
        segments=tuple(segs),
    )
