"""The pilot condition grid: enumeration, exclusions, per-condition runs.

Each included condition renders a short train of identical grain events,
sends it through latency compensation, drives the matching device model,
and reports force and response metrics. Excluded cells stay in the output
as records carrying their reasons.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import EngineConfig
from .devices import DeviceTrace, simulate_ct, simulate_ksfr
from .errors import ExcludedCondition, GrainTouchError
from .grain import (
    DURATIONS_MS,
    FORCE_AMPLITUDES_N,
    ForceMode,
    GrainSpec,
    cycle_fit_check,
    make_periodic_schedule,
    vibratory_cycle_count,
)
from .render import (
    SampleTrack,
    above_baseline_runs,
    pulse_sample_count,
    render_tracks,
    round_half_up,
)
from .sync import apply_channel_delays, compensate, measure_alignment

REASON_CYCLE_FIT = "vibratory-pulse-shorter-than-one-cycle"
REASON_KSFR_HOUSING = "ksfr-1ms-housing-artifact"
KSFR_EXCLUDED_DURATION_MS = 1.0


class Interface(str, enum.Enum):
    CT = "CT"
    KSFR = "KSFR"


class PulseMode(str, enum.Enum):
    CONSTANT = "Constant"
    SINE250 = "Sine250"


@dataclass(frozen=True)
class Condition:
    interface: Interface
    duration_ms: float
    force_amplitude_n: float
    force_mode: PulseMode

    def __post_init__(self):
        object.__setattr__(self, "interface", Interface(self.interface))
        object.__setattr__(self, "force_mode", PulseMode(self.force_mode))
        if self.duration_ms not in DURATIONS_MS:
            raise ValueError(f"duration {self.duration_ms} ms is not a grid value")
        if self.force_amplitude_n not in FORCE_AMPLITUDES_N:
            raise ValueError(f"amplitude {self.force_amplitude_n} N is not a grid value")

    @property
    def id(self) -> str:
        return (
            f"{self.interface.value}_{self.duration_ms:g}ms_"
            f"{self.force_amplitude_n:.2f}N_{self.force_mode.value}"
        )

    def grain(self, cfg: EngineConfig | None = None, onset_s: float = 0.0) -> GrainSpec:
        cfg = EngineConfig() if cfg is None else cfg
        return GrainSpec(
            onset_s=onset_s,
            duration_ms=self.duration_ms,
            audio_carrier_hz=cfg.audio_carrier_hz,
            audio_amplitude=cfg.audio_amplitude,
            force_mode=ForceMode.SINE if self.force_mode is PulseMode.SINE250 else ForceMode.CONSTANT,
            force_amplitude_n=self.force_amplitude_n,
            force_sine_hz=cfg.force_sine_hz,
        )

    @property
    def exclusion_reasons(self) -> tuple[str, ...]:
        reasons = []
        if not cycle_fit_check(self.grain()):
            reasons.append(REASON_CYCLE_FIT)
        if self.interface is Interface.KSFR and self.duration_ms == KSFR_EXCLUDED_DURATION_MS:
            reasons.append(REASON_KSFR_HOUSING)
        return tuple(reasons)

    @property
    def included(self) -> bool:
        return not self.exclusion_reasons

    def sort_key(self):
        return (
            list(Interface).index(self.interface),
            -self.duration_ms,
            -self.force_amplitude_n,
            list(PulseMode).index(self.force_mode),
        )

    def to_dict(self) -> dict:
        return {
            "interface": self.interface.value,
            "duration_ms": self.duration_ms,
            "force_amplitude_n": self.force_amplitude_n,
            "force_mode": self.force_mode.value,
        }


def enumerate_conditions(interfaces=None) -> list[Condition]:
    """Every grid cell in summary order; inclusion is a property of each cell."""
    interfaces = list(Interface) if interfaces is None else [Interface(i) for i in interfaces]
    return [
        Condition(i, d, a, m)
        for i, d, a, m in itertools.product(interfaces, DURATIONS_MS, FORCE_AMPLITUDES_N, PulseMode)
    ]


@dataclass(frozen=True)
class ConditionReport:
    condition: Condition
    included: bool
    exclusion_reasons: tuple[str, ...] = ()
    rms_force_n: float | None = None
    pulse_energy_n2s: float | None = None
    cycle_count: float | None = None
    peak_displacement_m: float | None = None
    peak_velocity_deficit_m_per_s: float | None = None
    pulse_count: int | None = None
    lag_ms: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"id": self.condition.id, **self.condition.to_dict()}
        d["included"] = self.included
        d["exclusion_reasons"] = list(self.exclusion_reasons)
        for name in (
            "rms_force_n",
            "pulse_energy_n2s",
            "cycle_count",
            "peak_displacement_m",
            "peak_velocity_deficit_m_per_s",
            "pulse_count",
            "lag_ms",
            "error",
        ):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d

    @property
    def peak_response(self) -> float | None:
        if self.condition.interface is Interface.CT:
            return self.peak_displacement_m
        return self.peak_velocity_deficit_m_per_s


@dataclass(frozen=True, eq=False)
class ConditionRun:
    report: ConditionReport
    audio: SampleTrack
    force: SampleTrack
    trace: DeviceTrace


def pulse_metrics(force: SampleTrack, baseline: float, start: int, n: int):
    """RMS above baseline and energy (N^2 s) of the pulse at ``[start, start+n)``."""
    excess = np.asarray(force.samples[start : start + n]) - baseline
    rms = math.sqrt(float(np.mean(excess * excess)))
    energy = float(np.sum(excess * excess)) / force.rate_hz
    return rms, energy


def execute_condition(c: Condition, cfg: EngineConfig | None = None) -> ConditionRun:
    cfg = EngineConfig() if cfg is None else cfg
    if not c.included:
        raise ExcludedCondition(f"{c.id} is excluded: {', '.join(c.exclusion_reasons)}")
    schedule = make_periodic_schedule(
        cfg.events_per_condition,
        cfg.onset_interval_s,
        c.grain(cfg),
        cfg.baseline_force_n,
        start_s=cfg.lead_in_s,
        label=c.id,
    )
    latency = cfg.latency()
    audio_sched, force_sched = compensate(schedule, latency)
    render = dict(
        audio_rate_hz=cfg.audio_rate_hz,
        force_rate_hz=cfg.force_rate_hz,
        total_s=cfg.total_s,
        trough_fraction=cfg.vibration_trough_fraction,
    )
    audio, _ = render_tracks(audio_sched, **render)
    _, force = render_tracks(force_sched, **render)
    heard, felt = apply_channel_delays(audio, force, latency)

    baseline = cfg.baseline_force_n
    runs = above_baseline_runs(force.samples, baseline)
    if len(runs) != len(schedule):
        raise GrainTouchError(f"{c.id}: {len(runs)} force pulses for {len(schedule)} grains")
    first = round_half_up(force_sched.grains[0].onset_s * force.rate_hz)
    rms, energy = pulse_metrics(force, baseline, first, pulse_sample_count(c.duration_ms, force.rate_hz))

    if c.interface is Interface.CT:
        trace = simulate_ct(felt, cfg.ct(), baseline_n=baseline)
        response = {"peak_displacement_m": trace.peak_displacement()}
    else:
        ksfr = cfg.ksfr()
        trace = simulate_ksfr(felt, ksfr, baseline_n=baseline)
        response = {
            "peak_velocity_deficit_m_per_s": trace.peak_velocity_deficit(
                ksfr.intended_velocity_m_per_s
            )
        }
    cycles = (
        vibratory_cycle_count(c.duration_ms, cfg.force_sine_hz)
        if c.force_mode is PulseMode.SINE250
        else None
    )
    report = ConditionReport(
        condition=c,
        included=True,
        rms_force_n=rms,
        pulse_energy_n2s=energy,
        cycle_count=cycles,
        pulse_count=len(runs),
        lag_ms=measure_alignment(heard, felt),
        **response,
    )
    return ConditionRun(report, audio, force, trace)


def run_condition(c: Condition, cfg: EngineConfig | None = None) -> ConditionReport:
    return execute_condition(c, cfg).report


@dataclass
class GridResult:
    reports: list[ConditionReport] = field(default_factory=list)
    exclusions: list[ConditionReport] = field(default_factory=list)
    failures: list[ConditionReport] = field(default_factory=list)

    def all_records(self) -> list[ConditionReport]:
        return sorted(
            self.reports + self.exclusions + self.failures,
            key=lambda r: r.condition.sort_key(),
        )

    def report_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.all_records())

    def summary_table(self) -> str:
        head = (
            f"{'interface':<9} {'dur_ms':>6} {'amp_N':>5} {'mode':<8} {'status':<8} "
            f"{'rms_N':>8} {'energy_N2s':>11} {'cycles':>6} {'response':>12} {'lag_ms':>7}"
        )
        lines = [head, "-" * len(head)]
        for r in self.all_records():
            c = r.condition
            prefix = (
                f"{c.interface.value:<9} {c.duration_ms:>6g} {c.force_amplitude_n:>5.2f} "
                f"{c.force_mode.value:<8} "
            )
            if r.error is not None:
                lines.append(prefix + f"{'FAILED':<8} {r.error}")
            elif not r.included:
                lines.append(prefix + f"{'excluded':<8} {', '.join(r.exclusion_reasons)}")
            else:
                cycles = "-" if r.cycle_count is None else f"{r.cycle_count:g}"
                lines.append(
                    prefix
                    + f"{'ok':<8} {r.rms_force_n:>8.4f} {r.pulse_energy_n2s:>11.4e} "
                    f"{cycles:>6} {r.peak_response:>12.4e} {r.lag_ms:>7.3f}"
                )
        lines.append("")
        lines.append(
            f"{len(self.reports)} reports, {len(self.exclusions)} exclusions, "
            f"{len(self.failures)} failures; response = peak displacement (m) for CT, "
            "peak velocity deficit (m/s) for KSFR"
        )
        return "\n".join(lines) + "\n"


def _write_run(run: ConditionRun, out: Path) -> None:
    from . import formats

    stem = run.report.condition.id
    formats.write_wav(out / "stimuli" / f"{stem}_audio.wav", run.audio)
    formats.write_wav(out / "stimuli" / f"{stem}_force.wav", run.force)
    formats.write_force_csv(out / "stimuli" / f"{stem}_force.csv", run.force)
    formats.write_trace_csv(out / "traces" / f"{stem}_trace.csv", run.trace)


def run_grid(cfg: EngineConfig | None = None, interfaces=None, out_dir=None) -> GridResult:
    """Run every included cell; failures are recorded, not raised.

    With ``out_dir`` set, writes stimuli (WAV/CSV), device traces, the JSONL
    report and the summary table there.
    """
    cfg = EngineConfig() if cfg is None else cfg
    out = None if out_dir is None else Path(out_dir)
    if out is not None:
        (out / "stimuli").mkdir(parents=True, exist_ok=True)
        (out / "traces").mkdir(parents=True, exist_ok=True)
    result = GridResult()
    for c in enumerate_conditions(interfaces):
        if not c.included:
            result.exclusions.append(ConditionReport(c, False, c.exclusion_reasons))
            continue
        try:
            run = execute_condition(c, cfg)
        except (GrainTouchError, ValueError, ArithmeticError) as exc:
            result.failures.append(ConditionReport(c, True, error=f"{type(exc).__name__}: {exc}"))
            continue
        result.reports.append(run.report)
        if out is not None:
            _write_run(run, out)
    result.reports.sort(key=lambda r: r.condition.sort_key())
    if out is not None:
        (out / "report.jsonl").write_text(result.report_jsonl())
        (out / "summary.txt").write_text(result.summary_table())
    return result
