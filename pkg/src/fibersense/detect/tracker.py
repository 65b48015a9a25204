"""Track management: greedy association, lifecycle, velocity estimation."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
ENDED = "ended"

STATIONARY = "stationary"
MOVING = "moving"

# Number of consecutive velocity estimates on one side of the threshold
# needed to flip the motion state.
MOTION_SUSTAIN_ESTIMATES = 2


@dataclass
class EventTrack:
    id: int
    born_t_s: float
    last_seen_t_s: float
    state: str = TENTATIVE
    centroid_history: list = field(default_factory=list)  # [(t_s, x_m)]
    span_history: list = field(default_factory=list)  # [(t_s, x0_m, x1_m)]
    last_span_bins: tuple = (0, 0)
    motion: str = STATIONARY
    velocity_mps: float = 0.0
    patch_buffer: deque = field(default_factory=deque)
    class_history: list = field(default_factory=list)  # [(t_s, label, confidence)]
    hits: int = 0  # consecutive associated blocks
    misses: int = 0  # consecutive unassociated blocks
    _vel_above: int = 0
    _vel_below: int = 0

    @property
    def last_centroid_m(self):
        return self.centroid_history[-1][1]

    @property
    def last_span_m(self):
        _, x0, x1 = self.span_history[-1]
        return x0, x1


@dataclass
class Notification:
    event: str  # created | updated | ended
    id: int
    t_s: float
    x_start_m: float
    x_end_m: float
    centroid_m: float
    motion: str
    velocity_mps: float

    def to_dict(self):
        return {
            "event": self.event,
            "id": self.id,
            "t_s": self.t_s,
            "x_start_m": self.x_start_m,
            "x_end_m": self.x_end_m,
            "centroid_m": self.centroid_m,
            "motion": self.motion,
            "velocity_mps": self.velocity_mps,
        }


def ls_velocity(points):
    """Least-squares slope (m/s) of (t_s, x_m) samples; 0 for degenerate input."""
    t = np.array([p[0] for p in points], dtype=np.float64)
    x = np.array([p[1] for p in points], dtype=np.float64)
    t = t - t.mean()
    denom = float(np.dot(t, t))
    if denom == 0.0:
        return 0.0
    return float(np.dot(t, x - x.mean()) / denom)


def estimate_velocity(track, vel_window=10, v_min_mps=0.5):
    """Update the track's velocity estimate and motion state.

    The velocity is the least-squares slope over the last vel_window centroid
    samples.  Motion flips to moving only after MOTION_SUSTAIN_ESTIMATES
    consecutive estimates with |v| >= v_min_mps, and back to stationary after
    the same number of consecutive sub-threshold estimates.  With fewer than
    vel_window samples the estimate is withheld and motion stays stationary.
    Returns (velocity_mps, motion).
    """
    if len(track.centroid_history) < vel_window:
        return track.velocity_mps, track.motion
    v = ls_velocity(track.centroid_history[-vel_window:])
    track.velocity_mps = v
    if abs(v) >= v_min_mps:
        track._vel_above += 1
        track._vel_below = 0
        if track._vel_above >= MOTION_SUSTAIN_ESTIMATES:
            track.motion = MOVING
    else:
        track._vel_below += 1
        track._vel_above = 0
        if track._vel_below >= MOTION_SUSTAIN_ESTIMATES:
            track.motion = STATIONARY
    return track.velocity_mps, track.motion


def _spans_touch(a, b, adjacency_m):
    a0, a1 = a
    b0, b1 = b
    return a0 <= b1 + adjacency_m and b0 <= a1 + adjacency_m


class Tracker:
    """Associates spatial clusters with event tracks across blocks."""

    def __init__(
        self,
        bin_size_m,
        assoc_max_m=10.0,
        adjacency_m=3.0,
        confirm_blocks=3,
        timeout_blocks=10,
        vel_window=10,
        v_min_mps=0.5,
        patch_maxlen=2000,
    ):
        self.bin_size_m = float(bin_size_m)
        self.assoc_max_m = float(assoc_max_m)
        self.adjacency_m = float(adjacency_m)
        self.confirm_blocks = int(confirm_blocks)
        self.timeout_blocks = int(timeout_blocks)
        self.vel_window = int(vel_window)
        self.v_min_mps = float(v_min_mps)
        self.patch_maxlen = int(patch_maxlen)
        self.tracks = []  # live tracks only
        self._next_id = 1

    def live_tracks(self):
        return list(self.tracks)

    def confirmed_tracks(self):
        return [t for t in self.tracks if t.state == CONFIRMED]

    def _notify(self, event, track, t_s):
        x0, x1 = track.last_span_m
        return Notification(
            event=event,
            id=track.id,
            t_s=t_s,
            x_start_m=x0,
            x_end_m=x1,
            centroid_m=track.last_centroid_m,
            motion=track.motion,
            velocity_mps=track.velocity_mps,
        )

    def step(self, clusters, t_s):
        """Advance one block: associate clusters, update lifecycles.

        Greedy nearest-centroid matching: candidate (track, cluster) pairs
        within the distance gate and spatially overlapping or adjacent are
        taken in order of increasing distance (ties by older track id, then
        cluster position); each side is used at most once per block.
        """
        notifications = []

        candidates = []
        for ci, cluster in enumerate(clusters):
            c_span = cluster.span_m(self.bin_size_m)
            for track in self.tracks:
                d = abs(cluster.centroid_m - track.last_centroid_m)
                if d > self.assoc_max_m:
                    continue
                if not _spans_touch(track.last_span_m, c_span, self.adjacency_m):
                    continue
                candidates.append((d, track.id, ci))
        candidates.sort()

        matched_tracks = {}
        used_clusters = set()
        by_id = {t.id: t for t in self.tracks}
        for d, tid, ci in candidates:
            if tid in matched_tracks or ci in used_clusters:
                continue
            matched_tracks[tid] = ci
            used_clusters.add(ci)

        survivors = []
        for track in self.tracks:
            if track.id in matched_tracks:
                cluster = clusters[matched_tracks[track.id]]
                self._observe(track, cluster, t_s)
                track.hits += 1
                track.misses = 0
                estimate_velocity(track, self.vel_window, self.v_min_mps)
                if track.state == TENTATIVE and track.hits >= self.confirm_blocks:
                    track.state = CONFIRMED
                    notifications.append(self._notify("created", track, t_s))
                elif track.state == CONFIRMED:
                    notifications.append(self._notify("updated", track, t_s))
                survivors.append(track)
            else:
                track.misses += 1
                track.hits = 0
                if track.misses >= self.timeout_blocks:
                    if track.state == CONFIRMED:
                        track.state = ENDED
                        notifications.append(self._notify("ended", track, t_s))
                    # tentative tracks die silently
                else:
                    survivors.append(track)
        self.tracks = survivors

        for ci, cluster in enumerate(clusters):
            if ci in used_clusters:
                continue
            track = EventTrack(
                id=self._next_id,
                born_t_s=t_s,
                last_seen_t_s=t_s,
                patch_buffer=deque(maxlen=self.patch_maxlen),
            )
            self._next_id += 1
            self._observe(track, cluster, t_s)
            track.hits = 1
            if track.hits >= self.confirm_blocks:
                track.state = CONFIRMED
                notifications.append(self._notify("created", track, t_s))
            self.tracks.append(track)

        return notifications

    def finalize(self, t_s):
        """End all live tracks, e.g. at the end of a recording."""
        notifications = []
        for track in self.tracks:
            if track.state == CONFIRMED:
                track.state = ENDED
                notifications.append(self._notify("ended", track, t_s))
        self.tracks = []
        return notifications

    def _observe(self, track, cluster, t_s):
        x0, x1 = cluster.span_m(self.bin_size_m)
        track.centroid_history.append((t_s, cluster.centroid_m))
        track.span_history.append((t_s, x0, x1))
        track.last_span_bins = (cluster.x_start_bin, cluster.x_end_bin)
        track.last_seen_t_s = t_s
