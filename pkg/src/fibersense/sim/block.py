"""Waterfall block: a contiguous chunk of differential-phase traces."""

from dataclasses import dataclass

import numpy as np


@dataclass
class WaterfallBlock:
    """n_traces consecutive traces of n_bins differential phase samples (rad).

    Trace i was acquired at t0_s + i / pulse_rate; samples[i, x] is the
    phase in spatial bin x.
    """

    t0_s: float
    n_traces: int
    n_bins: int
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != (self.n_traces, self.n_bins):
            raise ValueError(
                f"samples shape {self.samples.shape} does not match "
                f"({self.n_traces}, {self.n_bins})"
            )
        if not np.isfinite(self.samples).all():
            raise ValueError("block contains non-finite samples")
