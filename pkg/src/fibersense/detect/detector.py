"""Streaming detector: background, activity, clustering and tracking per block."""

from dataclasses import dataclass

import numpy as np

from ..errors import StreamError
from .background import BackgroundModel, apply_hysteresis, block_energy
from .clustering import segment_active_bins
from .tracker import Tracker


@dataclass
class DetectorConfig:
    alpha: float = 0.01
    sigma_floor: float = 1e-6
    warmup_blocks: int = 50
    init_sigma_scale: float = 0.5
    k_on: float = 5.0
    k_off: float = 3.0
    gap_bins: int = 3
    min_width_bins: int = 2
    assoc_max_m: float = 10.0
    adjacency_m: float = 3.0
    confirm_blocks: int = 3
    timeout_blocks: int = 10
    vel_window: int = 10
    v_min_mps: float = 0.5
    patch_seconds: float = 2.0  # per-track ring buffer capacity

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


def dilate_mask(mask, radius):
    """Binary dilation of a 1-d boolean mask by +-radius bins."""
    mask = np.asarray(mask, dtype=bool)
    out = mask.copy()
    for shift in range(1, int(radius) + 1):
        out[shift:] |= mask[:-shift]
        out[:-shift] |= mask[shift:]
    return out


class StreamDetector:
    """Consumes WaterfallBlocks, maintains tracks, emits notifications.

    Per block: compute energy; while warming up only feed the background.
    Once warm: score activity against the background with hysteresis,
    cluster active bins, associate clusters to tracks, then update the
    background with active regions (dilated by gap_bins) frozen so events
    do not get absorbed.
    """

    def __init__(self, layout, config=None):
        self.layout = layout
        self.config = config or DetectorConfig()
        c = self.config
        self.bg = BackgroundModel(
            alpha=c.alpha,
            sigma_floor=c.sigma_floor,
            warmup_blocks=c.warmup_blocks,
            init_sigma_scale=c.init_sigma_scale,
        )
        patch_maxlen = max(1, int(round(c.patch_seconds * layout.pulse_rate_hz)))
        self.tracker = Tracker(
            bin_size_m=layout.bin_size_m,
            assoc_max_m=c.assoc_max_m,
            adjacency_m=c.adjacency_m,
            confirm_blocks=c.confirm_blocks,
            timeout_blocks=c.timeout_blocks,
            vel_window=c.vel_window,
            v_min_mps=c.v_min_mps,
            patch_maxlen=patch_maxlen,
        )
        self.prev_active = None
        self.last_freeze = None  # exposed for state-recomputation checks
        self.blocks_seen = 0
        self.last_z = None

    @property
    def is_warm(self):
        return self.bg.is_warm

    def process_block(self, block):
        if block.n_bins != self.layout.n_bins:
            raise StreamError(
                f"block has {block.n_bins} bins, detector expects {self.layout.n_bins}"
            )
        energy = block_energy(block)
        t_end = block.t0_s + block.n_traces / self.layout.pulse_rate_hz
        self.blocks_seen += 1

        if not self.bg.is_warm:
            self.bg.update(energy)
            self.last_freeze = np.zeros(self.layout.n_bins, dtype=bool)
            return []

        c = self.config
        z = self.bg.z_scores(energy)
        active = apply_hysteresis(z, self.prev_active, c.k_on, c.k_off)
        excess = energy - self.bg.mean
        clusters = segment_active_bins(
            active,
            z,
            excess,
            self.layout.bin_size_m,
            gap_bins=c.gap_bins,
            min_width_bins=c.min_width_bins,
        )
        notifications = self.tracker.step(clusters, t_end)

        freeze = dilate_mask(active, c.gap_bins)
        self.bg.update(energy, freeze)
        self.prev_active = active
        self.last_freeze = freeze
        self.last_z = z

        samples = np.asarray(block.samples, dtype=np.float64)
        for track in self.tracker.live_tracks():
            b0, b1 = track.last_span_bins
            track.patch_buffer.extend(samples[:, b0 : b1 + 1].mean(axis=1))

        return notifications

    def finalize(self, t_s):
        return self.tracker.finalize(t_s)
