"""Grain and schedule value types.

A grain is one paired event: an audio burst on a sine carrier and a force
pulse on the haptic channel, both gated by the same on/off block impulse.
Times live here as float seconds; conversion to sample indices happens only
when rendering.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import (
    CycleFitError,
    DurationOutOfRange,
    NegativeAmplitude,
    NonPositiveFrequency,
    OverlapError,
    ScheduleError,
)

# pilot constants
ONSET_INTERVAL_S = 1.00
AUDIO_CARRIER_HZ = 4000.0
BASELINE_FORCE_N = 0.14
FORCE_SINE_HZ = 250.0
DURATIONS_MS = (100.0, 50.0, 10.0, 1.0)
FORCE_AMPLITUDES_N = (1.00, 0.72, 0.43)

MIN_DURATION_MS = 1.0
MAX_DURATION_MS = 100.0


class ForceMode(str, enum.Enum):
    CONSTANT = "Constant"
    SINE = "Sine"


@dataclass(frozen=True)
class GrainSpec:
    onset_s: float = 0.0
    duration_ms: float = 100.0
    audio_carrier_hz: float = AUDIO_CARRIER_HZ
    audio_amplitude: float = 1.0
    force_mode: ForceMode = ForceMode.CONSTANT
    force_amplitude_n: float = 1.0
    force_sine_hz: float = FORCE_SINE_HZ

    def __post_init__(self):
        # accept plain strings ("Sine") for convenience when loading records
        object.__setattr__(self, "force_mode", ForceMode(self.force_mode))

    @property
    def end_s(self) -> float:
        return self.onset_s + self.duration_ms / 1000.0

    def at(self, onset_s: float) -> "GrainSpec":
        return replace(self, onset_s=onset_s)


def validate_grain(spec: GrainSpec) -> None:
    """Raise the matching validation error if ``spec`` breaks an invariant.

    The raised exception's ``field`` attribute names the offending field.
    """
    if not (math.isfinite(spec.onset_s)):
        raise ScheduleError("onset_s", f"must be finite, got {spec.onset_s}")
    if not (MIN_DURATION_MS <= spec.duration_ms <= MAX_DURATION_MS):
        raise DurationOutOfRange(
            "duration_ms",
            f"{spec.duration_ms} ms outside [{MIN_DURATION_MS}, {MAX_DURATION_MS}]",
        )
    if not (0.0 <= spec.audio_amplitude <= 1.0):
        raise NegativeAmplitude(
            "audio_amplitude", f"{spec.audio_amplitude} outside [0, 1]"
        )
    if not (spec.force_amplitude_n >= 0.0) or not math.isfinite(spec.force_amplitude_n):
        raise NegativeAmplitude(
            "force_amplitude_n", f"{spec.force_amplitude_n} N is negative"
        )
    if not (spec.audio_carrier_hz > 0.0) or not math.isfinite(spec.audio_carrier_hz):
        raise NonPositiveFrequency(
            "audio_carrier_hz", f"{spec.audio_carrier_hz} Hz must be > 0"
        )
    if not (spec.force_sine_hz > 0.0) or not math.isfinite(spec.force_sine_hz):
        raise NonPositiveFrequency(
            "force_sine_hz", f"{spec.force_sine_hz} Hz must be > 0"
        )


def vibratory_cycle_count(duration_ms: float, force_sine_hz: float) -> float:
    """Number of vibration cycles that fit in a pulse of ``duration_ms``."""
    if not force_sine_hz > 0:
        raise NonPositiveFrequency("force_sine_hz", f"{force_sine_hz} Hz must be > 0")
    if not duration_ms > 0:
        raise DurationOutOfRange("duration_ms", f"{duration_ms} ms must be > 0")
    # multiply before dividing: exact for integer ms and Hz
    return duration_ms * force_sine_hz / 1000.0


def cycle_fit_check(spec: GrainSpec) -> bool:
    """True unless a vibratory pulse is too short for one full cycle."""
    if spec.force_mode is ForceMode.CONSTANT:
        return True
    return vibratory_cycle_count(spec.duration_ms, spec.force_sine_hz) >= 1.0


def require_cycle_fit(spec: GrainSpec) -> None:
    if not cycle_fit_check(spec):
        count = vibratory_cycle_count(spec.duration_ms, spec.force_sine_hz)
        raise CycleFitError(
            f"vibratory pulse of {spec.duration_ms} ms holds only {count:g} "
            f"cycles of {spec.force_sine_hz:g} Hz (need >= 1)"
        )


@dataclass(frozen=True)
class GrainSchedule:
    """Time-ordered, non-overlapping grains plus the resting contact force.

    Neighbouring force pulses must leave a gap (strictly), and every grain
    needs a non-zero force amplitude, otherwise a grain would have no
    distinct tangible counterpart.
    """

    grains: tuple[GrainSpec, ...] = ()
    baseline_force_n: float = BASELINE_FORCE_N
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "grains", tuple(self.grains))
        validate_schedule(self)

    def __len__(self):
        return len(self.grains)

    def __iter__(self):
        return iter(self.grains)

    @property
    def end_s(self) -> float:
        return max((g.end_s for g in self.grains), default=0.0)

    def shifted(self, offset_s: float, label: str | None = None) -> "GrainSchedule":
        return GrainSchedule(
            tuple(g.at(g.onset_s + offset_s) for g in self.grains),
            self.baseline_force_n,
            self.label if label is None else label,
        )


def validate_schedule(schedule: GrainSchedule) -> None:
    if not (schedule.baseline_force_n >= 0.0) or not math.isfinite(
        schedule.baseline_force_n
    ):
        raise NegativeAmplitude(
            "baseline_force_n", f"{schedule.baseline_force_n} N is negative"
        )
    prev = None
    for i, g in enumerate(schedule.grains):
        validate_grain(g)
        if not g.force_amplitude_n > 0.0:
            raise ScheduleError(
                "force_amplitude_n",
                f"grain {i} has no force pulse; every scheduled grain needs one",
            )
        if prev is not None:
            if not g.onset_s > prev.onset_s:
                raise ScheduleError(
                    "onset_s", f"grain {i} onset {g.onset_s} s not after {prev.onset_s} s"
                )
            if not prev.end_s < g.onset_s:
                raise OverlapError(
                    "onset_s",
                    f"grain {i - 1} ends at {prev.end_s} s, not before grain {i} "
                    f"onset {g.onset_s} s",
                )
        prev = g


def make_periodic_schedule(
    count: int,
    interval_s: float = ONSET_INTERVAL_S,
    template: GrainSpec | None = None,
    baseline_force_n: float = BASELINE_FORCE_N,
    *,
    start_s: float = 0.0,
    label: str = "",
) -> GrainSchedule:
    """``count`` copies of ``template`` with onsets ``start_s + k * interval_s``."""
    template = GrainSpec() if template is None else template
    if count < 1:
        raise ScheduleError("count", f"need at least one grain, got {count}")
    if not interval_s * 1000.0 > template.duration_ms:
        raise OverlapError(
            "interval_s",
            f"{template.duration_ms} ms pulses do not fit a {interval_s * 1000:g} ms interval",
        )
    grains = tuple(template.at(start_s + k * interval_s) for k in range(count))
    return GrainSchedule(grains, baseline_force_n, label)


def schedule_from_grains(
    grains: Sequence[GrainSpec], baseline_force_n: float = BASELINE_FORCE_N, label=""
) -> GrainSchedule:
    return GrainSchedule(tuple(sorted(grains, key=lambda g: g.onset_s)), baseline_force_n, label)
