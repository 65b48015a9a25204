"""Waterfall synthesis: turns source states into blocks of phase traces."""

import copy
from dataclasses import dataclass, field

import numpy as np

from .block import WaterfallBlock
from .layout import FiberLayout, build_layout
from .sources import (
    BandNoise,
    CAR_BAND_HZ,
    CarCommand,
    GustProcess,
    MAX_CAR_SPEED_MPS,
    RUMBLE_BAND_HZ,
    SIGNAL_KINDS,
    SetAudio,
    SetFan,
    SourceState,
    chirp_signature,
    fan_profile,
    gaussian_kernel,
    reflect_position,
    tone_signature,
)

# Gaussian kernels are evaluated only within this many sigmas of the center;
# beyond that the contribution is below 1.5e-8 of the peak and is treated as 0.
KERNEL_CUTOFF_SIGMAS = 6.0


@dataclass
class SimConfig:
    layout: FiberLayout = field(default_factory=build_layout)
    sources: SourceState = field(default_factory=SourceState)
    seed: int = 12345
    noise_sigma_rad: float = 0.01
    sensitivity_range: tuple = (0.3, 1.0)


class Simulator:
    """Deterministic phase-waterfall generator.

    A trace at time t holds, per spatial bin x,

        samples[t, x] = s[x] * (speaker + fan + car contributions)(t, x) + n[t, x]

    where s is a static per-bin sensitivity envelope and n is white Gaussian
    measurement noise.  Determinism contract: a fixed seed and command history
    produce bit-identical output.  To that end

    * the root seed is split into fixed-order substreams (sensitivity, white
      noise, speaker rumble, fan band noise, fan gust, car noise), so toggling
      one source never perturbs another's randomness,
    * every noise signature advances by n_traces samples per synthesized
      block whether or not its source is on,
    * contributions are accumulated in fixed order (speaker, fan, car), then
      scaled by sensitivity, then noise is added.
    """

    def __init__(self, config=None):
        self.config = config or SimConfig()
        self.layout = self.config.layout
        self.state = copy.deepcopy(self.config.sources)
        self.state.validate(self.layout)

        fs = self.layout.pulse_rate_hz
        self._fs = fs
        self._bins = self.layout.bin_centers()
        self.trace_index = 0

        seq = np.random.SeedSequence(self.config.seed)
        streams = [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(6)]
        (rng_sens, self._rng_white, rng_rumble, rng_fan, rng_gust, rng_car) = streams

        lo, hi = self.config.sensitivity_range
        if not (0 < lo <= hi):
            raise ValueError(f"bad sensitivity range {self.config.sensitivity_range}")
        self.sensitivity = rng_sens.uniform(lo, hi, self.layout.n_bins)

        self._rumble = BandNoise(RUMBLE_BAND_HZ, fs, rng_rumble)
        self._fan_noise = BandNoise(
            (self.state.fan.band_low_hz, self.state.fan.band_high_hz), fs, rng_fan
        )
        self._gust = GustProcess(self.state.fan.gust_time_constant_s, fs, rng_gust)
        self._car_noise = BandNoise(CAR_BAND_HZ, fs, rng_car)

    @property
    def time_s(self):
        return self.trace_index / self._fs

    # -- control -------------------------------------------------------------

    def validate_command(self, cmd):
        """Raise ValueError if the command cannot be applied."""
        if isinstance(cmd, SetFan):
            return
        if isinstance(cmd, SetAudio):
            if cmd.signal_kind not in SIGNAL_KINDS:
                raise ValueError(f"unknown signal kind {cmd.signal_kind!r}")
            return
        if isinstance(cmd, CarCommand):
            if cmd.action == "start":
                if cmd.speed_mps is None:
                    raise ValueError("car start requires speed_mps")
                if abs(cmd.speed_mps) > MAX_CAR_SPEED_MPS:
                    raise ValueError(
                        f"car speed {cmd.speed_mps} exceeds {MAX_CAR_SPEED_MPS} m/s"
                    )
            elif cmd.action != "stop":
                raise ValueError(f"unknown car action {cmd.action!r}")
            return
        raise ValueError(f"unknown command {cmd!r}")

    def apply_control(self, cmd):
        """Update source state; takes effect from the next synthesized trace.

        Invalid commands raise ValueError and leave the state unchanged.
        """
        self.validate_command(cmd)
        if isinstance(cmd, SetFan):
            self.state.fan.on = cmd.on
        elif isinstance(cmd, SetAudio):
            self.state.speaker.signal_kind = cmd.signal_kind
            self.state.speaker.on = cmd.on
        elif isinstance(cmd, CarCommand):
            if cmd.action == "start":
                self.state.car.driving = True
                self.state.car.speed_mps = float(cmd.speed_mps)
            else:
                self.state.car.driving = False

    # -- synthesis -------------------------------------------------------------

    def _kernel_window(self, center_lo, center_hi, sigma):
        reach = KERNEL_CUTOFF_SIGMAS * sigma
        i0 = self.layout.bin_of(center_lo - reach)
        i1 = self.layout.bin_of(center_hi + reach)
        return i0, i1 + 1

    def synthesize_block(self, n_traces):
        """Produce the next n_traces traces as one WaterfallBlock."""
        if n_traces <= 0:
            raise ValueError(f"n_traces must be positive, got {n_traces}")
        n = int(n_traces)
        nb = self.layout.n_bins
        t0 = self.trace_index / self._fs
        t = (self.trace_index + np.arange(n)) / self._fs

        # Noise signatures always advance to keep substreams aligned with the
        # trace clock regardless of which sources are on.
        rumble = self._rumble.next(n)
        fan_sig = self._fan_noise.next(n)
        gust = self._gust.next(n)
        car_sig = self._car_noise.next(n)

        contrib = np.zeros((n, nb))

        sp = self.state.speaker
        if sp.on:
            if sp.signal_kind == "tone":
                temporal = tone_signature(t)
            elif sp.signal_kind == "chirp":
                temporal = chirp_signature(t)
            else:
                temporal = rumble
            i0, i1 = self._kernel_window(sp.center_m, sp.center_m, sp.spatial_sigma_m)
            kernel = gaussian_kernel(self._bins[i0:i1], sp.center_m, sp.spatial_sigma_m)
            contrib[:, i0:i1] += sp.amplitude_rad * np.outer(temporal, kernel)

        fan = self.state.fan
        if fan.on:
            zone = self.layout.aerial_zone
            lo_bin = self.layout.bin_of(zone[0])
            hi_bin = self.layout.bin_of(zone[1]) + 1
            profile = fan_profile(self._bins[lo_bin:hi_bin], zone)
            contrib[:, lo_bin:hi_bin] += fan.amplitude_rad * np.outer(gust * fan_sig, profile)

        car = self.state.car
        if car.driving:
            r_lo, r_hi = self.layout.road_zone
            dt = 1.0 / self._fs
            raw = car.position_m + car.speed_mps * dt * np.arange(n)
            positions = reflect_position(raw, r_lo, r_hi)
            i0, i1 = self._kernel_window(r_lo, r_hi, car.spatial_sigma_m)
            d = (self._bins[i0:i1][None, :] - positions[:, None]) / car.spatial_sigma_m
            contrib[:, i0:i1] += (car.amplitude_rad * car_sig)[:, None] * np.exp(-0.5 * d * d)

            # Advance kinematics to the end of the block.  The fold is exact
            # for any excursion; travel direction flips iff the unfolded end
            # coordinate lands on the mirrored branch.
            raw_end = car.position_m + car.speed_mps * dt * n
            width = r_hi - r_lo
            q = float(np.mod(raw_end - r_lo, 2.0 * width))
            car.position_m = float(reflect_position(raw_end, r_lo, r_hi))
            if q >= width:
                car.speed_mps = -car.speed_mps

        samples = self.sensitivity[None, :] * contrib
        if self.config.noise_sigma_rad > 0:
            samples = samples + self._rng_white.normal(
                0.0, self.config.noise_sigma_rad, (n, nb)
            )

        self.trace_index += n
        return WaterfallBlock(t0_s=t0, n_traces=n, n_bins=nb, samples=samples)
