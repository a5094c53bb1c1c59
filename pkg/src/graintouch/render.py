"""Sample-accurate rendering of the audio and force channels.

Both channels are driven by the same on/off block impulse per grain. The
audio channel gates a sine carrier; the force channel gates either a flat
level or a unipolar 250 Hz vibration, on top of a constant contact force.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    OverlapError,
    RenderError,
    ScheduleError,
    UnderSampledCarrier,
)
from .grain import ForceMode, GrainSchedule, GrainSpec, require_cycle_fit, validate_grain

DEFAULT_AUDIO_RATE_HZ = 48000
DEFAULT_FORCE_RATE_HZ = 8000
DEFAULT_TROUGH_FRACTION = 0.1


class Unit(str, enum.Enum):
    NORMALIZED_AUDIO = "NormalizedAudio"
    NEWTONS = "Newtons"


@dataclass(frozen=True, eq=False)
class SampleTrack:
    """Uniformly sampled signal. ``samples[i]`` sits at ``start_s + i / rate_hz``."""

    rate_hz: float
    unit: Unit
    samples: np.ndarray
    start_s: float = 0.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "unit", Unit(self.unit))
        if not self.rate_hz > 0:
            raise ValueError(f"rate_hz must be > 0, got {self.rate_hz}")
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.unit is Unit.NORMALIZED_AUDIO and samples.size and np.abs(samples).max() > 1.0:
            raise ValueError("normalized audio must stay within [-1, 1]")
        if self.unit is Unit.NEWTONS and samples.size and samples.min() < 0.0:
            raise ValueError("force samples must be >= 0 N")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate_hz

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    def times(self) -> np.ndarray:
        return self.start_s + np.arange(self.samples.size) / self.rate_hz

    def delayed(self, delay_s: float) -> "SampleTrack":
        """Same samples, emitted ``delay_s`` later."""
        return SampleTrack(self.rate_hz, self.unit, self.samples, self.start_s + delay_s)

    def same_as(self, other: "SampleTrack") -> bool:
        return (
            self.rate_hz == other.rate_hz
            and self.unit is other.unit
            and self.start_s == other.start_s
            and np.array_equal(self.samples, other.samples)
        )


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def pulse_sample_count(duration_ms: float, rate_hz: float) -> int:
    return round_half_up(duration_ms * rate_hz / 1000.0)


def render_block_impulse(
    duration_ms: float,
    rate_hz: float,
    start_offset_samples: int = 0,
    total_samples: int | None = None,
) -> SampleTrack:
    """0/1 gate: ``round(duration * rate)`` ones starting at ``start_offset_samples``."""
    if not duration_ms > 0 or not rate_hz > 0:
        raise ValueError("duration_ms and rate_hz must be > 0")
    n_on = pulse_sample_count(duration_ms, rate_hz)
    if total_samples is None:
        total_samples = start_offset_samples + n_on
    gate = np.zeros(total_samples)
    gate[start_offset_samples : start_offset_samples + n_on] = 1.0
    return SampleTrack(rate_hz, Unit.NORMALIZED_AUDIO, gate)


def _check_rate(freq_hz: float, rate_hz: float, what: str) -> None:
    if not rate_hz > 2.0 * freq_hz:
        raise UnderSampledCarrier(
            f"{what} of {freq_hz:g} Hz needs a rate above {2 * freq_hz:g} Hz, got {rate_hz:g}"
        )


def _audio_pulse(spec: GrainSpec, rate_hz: float) -> np.ndarray:
    _check_rate(spec.audio_carrier_hz, rate_hz, "audio carrier")
    n = np.arange(pulse_sample_count(spec.duration_ms, rate_hz), dtype=np.float64)
    return spec.audio_amplitude * np.sin(2.0 * np.pi * (n * spec.audio_carrier_hz / rate_hz))


def vibration_shape(cycles: np.ndarray, trough_fraction: float = DEFAULT_TROUGH_FRACTION):
    """Unipolar vibration profile in [0, 1] as a function of elapsed cycles.

    Rises from 0 to 1 over the first half cycle like a raised cosine, then
    keeps oscillating between 1 and ``trough_fraction``. With a non-zero
    trough the force never touches baseline again inside the pulse, so one
    pulse reads as one above-baseline run.
    """
    raised = 0.5 - 0.5 * np.cos(2.0 * np.pi * cycles)
    return np.where(cycles <= 0.5, raised, trough_fraction + (1.0 - trough_fraction) * raised)


def _force_pulse(
    spec: GrainSpec, baseline_force_n: float, rate_hz: float, trough_fraction: float
) -> np.ndarray:
    n_on = pulse_sample_count(spec.duration_ms, rate_hz)
    if spec.force_mode is ForceMode.CONSTANT:
        return np.full(n_on, baseline_force_n + spec.force_amplitude_n)
    require_cycle_fit(spec)
    _check_rate(spec.force_sine_hz, rate_hz, "force vibration")
    cycles = np.arange(n_on, dtype=np.float64) * spec.force_sine_hz / rate_hz
    return baseline_force_n + spec.force_amplitude_n * vibration_shape(cycles, trough_fraction)


def render_audio_grain(spec: GrainSpec, rate_hz: float = DEFAULT_AUDIO_RATE_HZ) -> SampleTrack:
    """The gated carrier burst of one grain, starting at its onset sample."""
    validate_grain(spec)
    start = round_half_up(spec.onset_s * rate_hz)
    return SampleTrack(rate_hz, Unit.NORMALIZED_AUDIO, _audio_pulse(spec, rate_hz), start / rate_hz)


def render_force_grain(
    spec: GrainSpec,
    baseline_force_n: float,
    rate_hz: float = DEFAULT_FORCE_RATE_HZ,
    *,
    pad_samples: int = 0,
    trough_fraction: float = DEFAULT_TROUGH_FRACTION,
) -> SampleTrack:
    """The force pulse of one grain, with ``pad_samples`` of baseline either side."""
    validate_grain(spec)
    if baseline_force_n < 0:
        raise ValueError("baseline_force_n must be >= 0")
    pulse = _force_pulse(spec, baseline_force_n, rate_hz, trough_fraction)
    pad = np.full(pad_samples, float(baseline_force_n))
    start = round_half_up(spec.onset_s * rate_hz) - pad_samples
    return SampleTrack(rate_hz, Unit.NEWTONS, np.concatenate([pad, pulse, pad]), start / rate_hz)


def render_tracks(
    schedule: GrainSchedule,
    audio_rate_hz: float = DEFAULT_AUDIO_RATE_HZ,
    force_rate_hz: float = DEFAULT_FORCE_RATE_HZ,
    total_s: float | None = None,
    *,
    trough_fraction: float = DEFAULT_TROUGH_FRACTION,
) -> tuple[SampleTrack, SampleTrack]:
    """Render the audio and force tracks for a whole schedule over ``[0, total_s)``.

    Every grain yields one audio burst and one force pulse sharing onset and
    duration. Pulses that would touch or overlap once snapped to the force
    sample grid are rejected, since they would merge into one felt pulse.
    """
    if total_s is None:
        total_s = schedule.end_s
    n_audio = round_half_up(total_s * audio_rate_hz)
    n_force = round_half_up(total_s * force_rate_hz)
    audio = np.zeros(n_audio)
    force = np.full(n_force, float(schedule.baseline_force_n))
    prev_audio_end = 0
    prev_force_end = None
    for i, g in enumerate(schedule.grains):
        try:
            a = _audio_pulse(g, audio_rate_hz)
            f = _force_pulse(g, schedule.baseline_force_n, force_rate_hz, trough_fraction)
            a0 = round_half_up(g.onset_s * audio_rate_hz)
            f0 = round_half_up(g.onset_s * force_rate_hz)
            if a0 < 0 or f0 < 0:
                raise ScheduleError("onset_s", f"onset {g.onset_s} s before track start")
            if a0 + a.size > n_audio or f0 + f.size > n_force:
                raise ScheduleError(
                    "total_s", f"grain ends at {g.end_s} s, past track end {total_s} s"
                )
            if a0 < prev_audio_end or (prev_force_end is not None and f0 <= prev_force_end):
                raise OverlapError(
                    "onset_s",
                    f"pulse at {g.onset_s} s leaves no baseline sample after the previous one",
                )
        except (ValueError, ArithmeticError) as exc:
            raise RenderError(i, exc) from exc
        audio[a0 : a0 + a.size] = a
        force[f0 : f0 + f.size] = f
        prev_audio_end = a0 + a.size
        prev_force_end = f0 + f.size
    return (
        SampleTrack(audio_rate_hz, Unit.NORMALIZED_AUDIO, audio),
        SampleTrack(force_rate_hz, Unit.NEWTONS, force),
    )


def above_baseline_runs(samples: np.ndarray, baseline: float) -> list[tuple[int, int]]:
    """Half-open index ranges of maximal runs strictly above ``baseline``."""
    above = np.concatenate([[False], np.asarray(samples) > baseline, [False]])
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def count_pulses(track: SampleTrack, baseline: float) -> int:
    return len(above_baseline_runs(track.samples, baseline))
