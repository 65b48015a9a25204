"""Waterfall display tiles: downsampled block energy on a dB scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TILE_DB_MIN = -40.0
TILE_DB_MAX = 40.0
_REF_POWER = 1e-6  # 1 mrad^2, in rad^2


@dataclass(frozen=True)
class TilePacket:
    t0_s: float
    dt_s: float
    x0_m: float
    dx_m: float
    rows: int
    cols: int
    values: tuple  # row-major, rows * cols dB values

    def to_dict(self) -> dict:
        return {
            "t0_s": self.t0_s,
            "dt_s": self.dt_s,
            "x0_m": self.x0_m,
            "dx_m": self.dx_m,
            "rows": self.rows,
            "cols": self.cols,
            "values": list(self.values),
        }


def make_tile(samples, t0_s: float, pulse_rate_hz: float, bin_size_m: float,
              time_factor: int, space_factor: int) -> TilePacket | None:
    """Average-energy cells of time_factor traces by space_factor bins.

    Trailing traces that do not fill a whole row are dropped; this only
    affects the display, never the detection path. Returns None when
    the batch is shorter than one row.
    """
    arr = np.asarray(samples, dtype=np.float64)
    n_traces, n_bins = arr.shape
    rows = n_traces // time_factor
    cols = n_bins // space_factor
    if rows == 0 or cols == 0:
        return None
    trimmed = arr[: rows * time_factor, : cols * space_factor]
    energy = (trimmed**2).reshape(rows, time_factor, cols, space_factor).mean(axis=(1, 3))
    db = 10.0 * np.log10(np.maximum(energy, 1e-300) / _REF_POWER)
    db = np.clip(db, TILE_DB_MIN, TILE_DB_MAX)
    return TilePacket(
        t0_s=t0_s,
        dt_s=time_factor / pulse_rate_hz,
        x0_m=0.0,
        dx_m=space_factor * bin_size_m,
        rows=rows,
        cols=cols,
        values=tuple(float(v) for v in db.ravel()),
    )
