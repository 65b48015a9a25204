"""Grouping of active bins into spatial clusters."""

from dataclasses import dataclass

import numpy as np


@dataclass
class SpatialCluster:
    x_start_bin: int
    x_end_bin: int  # inclusive
    centroid_m: float
    peak_z: float
    total_excess_energy: float

    @property
    def width_bins(self):
        return self.x_end_bin - self.x_start_bin + 1

    def span_m(self, bin_size_m):
        """Meter extent [start, end) covered by the cluster's bins."""
        return self.x_start_bin * bin_size_m, (self.x_end_bin + 1) * bin_size_m


def segment_active_bins(active, z, excess, bin_size_m, gap_bins=3, min_width_bins=2):
    """Group active bins into clusters, bridging gaps of up to gap_bins.

    Two active bins belong to the same cluster when their indices differ by
    at most gap_bins.  Clusters narrower than min_width_bins (in bins, edge
    to edge inclusive) are discarded.  The centroid is the excess-energy
    weighted mean of the member bins' center positions; clusters are
    returned ordered by position.
    """
    idx = np.flatnonzero(np.asarray(active, dtype=bool))
    if idx.size == 0:
        return []

    z = np.asarray(z, dtype=np.float64)
    excess = np.asarray(excess, dtype=np.float64)

    clusters = []
    breaks = np.flatnonzero(np.diff(idx) > gap_bins)
    start = 0
    for stop in list(breaks + 1) + [idx.size]:
        members = idx[start:stop]
        start = stop
        first, last = int(members[0]), int(members[-1])
        if last - first + 1 < min_width_bins:
            continue
        weights = np.maximum(excess[members], 0.0)
        total = float(weights.sum())
        centers = (members + 0.5) * bin_size_m
        if total > 0.0:
            centroid = float(np.dot(weights, centers) / total)
        else:
            centroid = float(centers.mean())
        clusters.append(
            SpatialCluster(
                x_start_bin=first,
                x_end_bin=last,
                centroid_m=centroid,
                peak_z=float(z[members].max()),
                total_excess_energy=total,
            )
        )
    return clusters
