"""Per-bin background energy model with exponential moving statistics."""

import numpy as np

from ..errors import WarmupError


def block_energy(block):
    """Mean squared phase per spatial bin over one block, in float64."""
    samples = np.asarray(block.samples, dtype=np.float64)
    return np.mean(samples * samples, axis=0)


class BackgroundModel:
    """Tracks per-bin mean and variance of block energy with an EMA.

    Update recurrence, per unfrozen bin, with pre-update mean in the variance
    term:

        mean' = (1 - alpha) * mean + alpha * e
        var'  = (1 - alpha) * var  + alpha * (e - mean)^2

    The first observed block seeds the model: the mean is taken directly and
    the variance is seeded deliberately high, at (init_sigma_scale * mean)^2,
    so early z-scores err toward insensitivity while the EMA settles instead
    of spraying false detections.  The warmup counter decrements once per
    update; z-scores are refused until it reaches zero.
    """

    def __init__(
        self,
        alpha=0.01,
        sigma_floor=1e-6,
        warmup_blocks=50,
        init_sigma_scale=0.5,
        mean=None,
        var=None,
    ):
        if not (0 < alpha <= 1):
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        if sigma_floor <= 0:
            raise ValueError("sigma_floor must be positive")
        self.alpha = float(alpha)
        self.sigma_floor = float(sigma_floor)
        self.warmup_remaining = int(warmup_blocks)
        self.init_sigma_scale = float(init_sigma_scale)
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64).copy()
        self.var = None if var is None else np.asarray(var, dtype=np.float64).copy()

    @property
    def is_warm(self):
        return self.mean is not None and self.warmup_remaining <= 0

    def update(self, energy, freeze=None):
        """Fold one block's energy vector into the model.

        ``freeze`` is an optional boolean mask; frozen bins keep their mean
        and variance unchanged so active events do not get absorbed into the
        background.
        """
        e = np.asarray(energy, dtype=np.float64)
        if self.mean is None:
            self.mean = e.copy()
            seed_sigma = self.init_sigma_scale * np.maximum(e, self.sigma_floor)
            self.var = seed_sigma * seed_sigma
        else:
            if e.shape != self.mean.shape:
                raise ValueError(f"energy shape {e.shape} != model shape {self.mean.shape}")
            a = self.alpha
            new_mean = (1.0 - a) * self.mean + a * e
            delta = e - self.mean  # pre-update mean
            new_var = (1.0 - a) * self.var + a * delta * delta
            if freeze is not None:
                keep = np.asarray(freeze, dtype=bool)
                new_mean[keep] = self.mean[keep]
                new_var[keep] = self.var[keep]
            self.mean = new_mean
            self.var = new_var
        if self.warmup_remaining > 0:
            self.warmup_remaining -= 1

    def sigma(self):
        return np.maximum(np.sqrt(self.var), self.sigma_floor)

    def z_scores(self, energy):
        """Standardized excess energy per bin; refuses to run during warmup."""
        if not self.is_warm:
            raise WarmupError(
                f"background needs {self.warmup_remaining} more blocks of warmup"
            )
        e = np.asarray(energy, dtype=np.float64)
        return (e - self.mean) / self.sigma()


def apply_hysteresis(z, prev_active, k_on=5.0, k_off=3.0):
    """Two-threshold activity latch: on at z >= k_on, off below k_off."""
    z = np.asarray(z)
    if prev_active is None:
        return z >= k_on
    prev_active = np.asarray(prev_active, dtype=bool)
    return np.where(prev_active, z >= k_off, z >= k_on)
