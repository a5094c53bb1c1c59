"""Flat ``key = value`` configuration covering every module default."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .devices import CTParams, KSFRParams
from .errors import ConfigError
from .grain import AUDIO_CARRIER_HZ, BASELINE_FORCE_N, FORCE_SINE_HZ, ONSET_INTERVAL_S
from .render import DEFAULT_AUDIO_RATE_HZ, DEFAULT_FORCE_RATE_HZ, DEFAULT_TROUGH_FRACTION
from .sync import LatencyConfig


@dataclass(frozen=True)
class EngineConfig:
    # rendering
    audio_rate_hz: int = DEFAULT_AUDIO_RATE_HZ
    force_rate_hz: int = DEFAULT_FORCE_RATE_HZ
    audio_carrier_hz: float = AUDIO_CARRIER_HZ
    audio_amplitude: float = 1.0
    force_sine_hz: float = FORCE_SINE_HZ
    baseline_force_n: float = BASELINE_FORCE_N
    vibration_trough_fraction: float = DEFAULT_TROUGH_FRACTION
    # schedule
    onset_interval_s: float = ONSET_INTERVAL_S
    events_per_condition: int = 3
    lead_in_s: float = 0.05
    # latency
    audio_latency_ms: float = 0.0
    force_latency_ms: float = 0.0
    tolerance_ms: float = 1.0
    # CT plant
    ct_mass_kg: float = 0.02
    ct_stiffness_n_per_m: float = 500.0
    ct_damping_ns_per_m: float = 2.0
    ct_dt_s: float = 1.0 / DEFAULT_FORCE_RATE_HZ
    # KSFR plant
    ksfr_mass_kg: float = 0.2
    ksfr_intended_velocity_m_per_s: float = 0.1
    ksfr_recovery_gain_n_per_m_per_s: float = 8.0
    ksfr_dt_s: float = 1.0 / DEFAULT_FORCE_RATE_HZ
    # streaming
    frame_ms: float = 1.0
    stream_buffer_frames: int = 64

    @property
    def total_s(self) -> float:
        return self.events_per_condition * self.onset_interval_s

    def latency(self) -> LatencyConfig:
        return LatencyConfig(self.audio_latency_ms, self.force_latency_ms, self.tolerance_ms)

    def ct(self) -> CTParams:
        return CTParams(
            self.ct_mass_kg, self.ct_stiffness_n_per_m, self.ct_damping_ns_per_m, self.ct_dt_s
        )

    def ksfr(self) -> KSFRParams:
        return KSFRParams(
            self.ksfr_mass_kg,
            self.ksfr_intended_velocity_m_per_s,
            self.ksfr_recovery_gain_n_per_m_per_s,
            self.ksfr_dt_s,
        )

    def replace(self, **changes) -> "EngineConfig":
        return dataclasses.replace(self, **changes)


def parse_config(text: str, base: EngineConfig | None = None) -> EngineConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    base = EngineConfig() if base is None else base
    types = {f.name: f.type for f in fields(EngineConfig)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key == "seed":
            raise ConfigError(f"line {lineno}: the engine is deterministic; 'seed' is not accepted")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        cast = int if types[key] in ("int", int) else float
        try:
            changes[key] = cast(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects {cast.__name__}, got {value!r}") from None
    try:
        return dataclasses.replace(base, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: EngineConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)!r}\n" for f in fields(cfg))
