"""Signal sources acting on the fiber and the commands that steer them.

Three sources are modeled:

* a loudspeaker in the acoustic zone playing a tone, a repeating chirp, or
  band-limited rumble,
* a fan blowing across the aerial zone, producing band-limited noise whose
  amplitude wanders with a mean-reverting gust process,
* a small car driving back and forth inside the road zone, radiating
  band-limited noise from its current position.

Temporal signatures are unit scale by construction (peak 1 for the
deterministic waveforms, unit RMS for filtered noise) so the ``amplitude_rad``
fields carry the physical magnitude.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from ..errors import LayoutError

SIGNAL_KINDS = ("tone", "chirp", "rumble")

TONE_FUNDAMENTAL_HZ = 120.0
TONE_HARMONIC_GAIN = 0.5  # second harmonic at 240 Hz

CHIRP_START_HZ = 50.0
CHIRP_END_HZ = 300.0
CHIRP_PERIOD_S = 5.0

RUMBLE_BAND_HZ = (30.0, 80.0)
CAR_BAND_HZ = (10.0, 80.0)

FAN_EDGE_TAPER_M = 5.0

# Gust process: mean-reverting around 1.0; the modulation applied to the fan
# is clipped so the fan never fully vanishes nor doubles unrealistically.
GUST_MEAN = 1.0
GUST_SIGMA = 0.25
GUST_CLIP = (0.3, 2.0)

MAX_CAR_SPEED_MPS = 10.0


@dataclass
class SpeakerState:
    on: bool = False
    signal_kind: str = "tone"
    center_m: float = 470.0
    spatial_sigma_m: float = 3.0
    amplitude_rad: float = 0.1


@dataclass
class FanState:
    on: bool = False
    band_low_hz: float = 5.0
    band_high_hz: float = 40.0
    gust_time_constant_s: float = 2.0
    amplitude_rad: float = 0.15


@dataclass
class CarState:
    driving: bool = False
    position_m: float = 775.0
    speed_mps: float = 2.0
    spatial_sigma_m: float = 4.0
    amplitude_rad: float = 0.15


@dataclass
class SourceState:
    speaker: SpeakerState = field(default_factory=SpeakerState)
    fan: FanState = field(default_factory=FanState)
    car: CarState = field(default_factory=CarState)

    def validate(self, layout):
        sp, fan, car = self.speaker, self.fan, self.car
        if sp.signal_kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {sp.signal_kind!r}")
        a_lo, a_hi = layout.acoustic_zone
        if not (a_lo <= sp.center_m < a_hi):
            raise LayoutError(
                f"speaker center {sp.center_m} m outside acoustic zone [{a_lo}, {a_hi})"
            )
        for name, value in (
            ("speaker.spatial_sigma_m", sp.spatial_sigma_m),
            ("speaker.amplitude_rad", sp.amplitude_rad),
            ("fan.amplitude_rad", fan.amplitude_rad),
            ("fan.gust_time_constant_s", fan.gust_time_constant_s),
            ("car.spatial_sigma_m", car.spatial_sigma_m),
            ("car.amplitude_rad", car.amplitude_rad),
        ):
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not (0 < fan.band_low_hz < fan.band_high_hz < layout.nyquist_hz):
            raise ValueError(
                f"fan band [{fan.band_low_hz}, {fan.band_high_hz}] must sit inside "
                f"(0, {layout.nyquist_hz}) Hz"
            )
        if abs(car.speed_mps) > MAX_CAR_SPEED_MPS:
            raise ValueError(f"car speed {car.speed_mps} exceeds {MAX_CAR_SPEED_MPS} m/s")
        r_lo, r_hi = layout.road_zone
        car.position_m = float(min(max(car.position_m, r_lo), r_hi))


# --- control commands ------------------------------------------------------


@dataclass(frozen=True)
class SetFan:
    on: bool


@dataclass(frozen=True)
class SetAudio:
    signal_kind: str
    on: bool


@dataclass(frozen=True)
class CarCommand:
    action: str  # "start" | "stop"
    speed_mps: float = None


def command_from_dict(obj):
    """Parse a control command from its wire form."""
    kind = obj.get("cmd")
    if kind == "set_fan":
        return SetFan(on=bool(obj["on"]))
    if kind == "set_audio":
        return SetAudio(signal_kind=str(obj["signal"]), on=bool(obj["on"]))
    if kind == "car":
        action = str(obj["action"])
        speed = obj.get("speed_mps")
        return CarCommand(action=action, speed_mps=None if speed is None else float(speed))
    raise ValueError(f"unknown command {obj!r}")


def command_to_dict(cmd):
    if isinstance(cmd, SetFan):
        return {"cmd": "set_fan", "on": cmd.on}
    if isinstance(cmd, SetAudio):
        return {"cmd": "set_audio", "signal": cmd.signal_kind, "on": cmd.on}
    if isinstance(cmd, CarCommand):
        out = {"cmd": "car", "action": cmd.action}
        if cmd.speed_mps is not None:
            out["speed_mps"] = cmd.speed_mps
        return out
    raise ValueError(f"not a command: {cmd!r}")


# --- temporal signatures ----------------------------------------------------


def tone_signature(t_s):
    """Steady two-component tone: fundamental plus a weaker second harmonic."""
    t = np.asarray(t_s, dtype=np.float64)
    w = 2.0 * np.pi * TONE_FUNDAMENTAL_HZ
    return np.sin(w * t) + TONE_HARMONIC_GAIN * np.sin(2.0 * w * t)


def chirp_signature(t_s):
    """Linear sweep repeating every CHIRP_PERIOD_S seconds.

    Instantaneous frequency runs from CHIRP_START_HZ to CHIRP_END_HZ across
    each period; phase restarts at the period boundary.
    """
    t = np.asarray(t_s, dtype=np.float64)
    tau = np.mod(t, CHIRP_PERIOD_S)
    rate = (CHIRP_END_HZ - CHIRP_START_HZ) / (2.0 * CHIRP_PERIOD_S)
    phase = 2.0 * np.pi * (CHIRP_START_HZ * tau + rate * tau * tau)
    return np.sin(phase)


class BandNoise:
    """Stream of band-limited Gaussian noise with unit steady-state RMS.

    White noise from a dedicated generator is shaped by a 4th-order
    band-pass (an order-2 Butterworth prototype applied as a band-pass via
    the bilinear transform, which doubles the order).  The output is scaled
    by the filter's white-noise gain so that the long-run RMS is 1; filter
    state persists across calls so consecutive calls produce one continuous
    process.
    """

    def __init__(self, band_hz, rate_hz, rng):
        low, high = band_hz
        nyq = rate_hz / 2.0
        if not (0 < low < high < nyq):
            raise ValueError(f"band {band_hz} outside (0, {nyq}) Hz")
        self._b, self._a = sps.butter(2, [low / nyq, high / nyq], btype="bandpass")
        # White-noise power gain = impulse response energy.
        impulse = np.zeros(8192)
        impulse[0] = 1.0
        h = sps.lfilter(self._b, self._a, impulse)
        self._gain = float(np.sqrt(np.sum(h * h)))
        self._zi = np.zeros(max(len(self._a), len(self._b)) - 1)
        self._rng = rng

    def next(self, n):
        white = self._rng.standard_normal(n)
        shaped, self._zi = sps.lfilter(self._b, self._a, white, zi=self._zi)
        return shaped / self._gain


class GustProcess:
    """Mean-reverting random modulation for the fan amplitude.

    Discretized first-order relaxation toward GUST_MEAN with time constant
    ``tau_s`` and stationary standard deviation GUST_SIGMA.  The internal
    state is left unclipped to keep the recurrence linear; the returned
    modulation is clipped to GUST_CLIP.
    """

    def __init__(self, tau_s, rate_hz, rng):
        if tau_s <= 0:
            raise ValueError("gust time constant must be positive")
        dt = 1.0 / rate_hz
        self._decay = max(0.0, 1.0 - dt / tau_s)
        # Drive amplitude giving stationary variance GUST_SIGMA^2.
        self._drive = GUST_SIGMA * np.sqrt(max(1.0 - self._decay**2, 0.0))
        self._state = GUST_MEAN
        self._rng = rng

    def next(self, n):
        inputs = (1.0 - self._decay) * GUST_MEAN + self._drive * self._rng.standard_normal(n)
        out, zf = sps.lfilter([1.0], [1.0, -self._decay], inputs, zi=[self._decay * self._state])
        self._state = float(out[-1])
        return np.clip(out, GUST_CLIP[0], GUST_CLIP[1])


# --- spatial kernels ---------------------------------------------------------


def gaussian_kernel(x_m, center_m, sigma_m):
    d = (np.asarray(x_m, dtype=np.float64) - center_m) / sigma_m
    return np.exp(-0.5 * d * d)


def fan_profile(x_m, zone, taper_m=FAN_EDGE_TAPER_M):
    """Flat response of 1.0 across the zone, ramping to 0 over taper_m at each edge."""
    lo, hi = zone
    x = np.asarray(x_m, dtype=np.float64)
    ramp = np.minimum((x - lo) / taper_m, (hi - x) / taper_m)
    return np.clip(ramp, 0.0, 1.0)


def reflect_position(x_m, lo, hi):
    """Fold an unconstrained coordinate into [lo, hi] by mirror reflection."""
    width = hi - lo
    if width <= 0:
        return lo
    q = np.mod(x_m - lo, 2.0 * width)
    return lo + np.where(q <= width, q, 2.0 * width - q)
