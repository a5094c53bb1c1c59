"""Latency compensation and alignment measurement between the two channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import NegativeEmissionTime, SilentTrack
from .grain import GrainSchedule
from .render import SampleTrack, Unit

ANALYSIS_RATE_HZ = 8000.0
ENVELOPE_WINDOW_MS = 2.0
DEFAULT_MAX_LAG_MS = 250.0
ACTIVITY_FLOOR = 1e-6


@dataclass(frozen=True)
class LatencyConfig:
    audio_latency_ms: float = 0.0
    force_latency_ms: float = 0.0
    tolerance_ms: float = 1.0

    def __post_init__(self):
        if self.audio_latency_ms < 0 or self.force_latency_ms < 0:
            raise ValueError("latencies must be >= 0 ms")
        if not self.tolerance_ms > 0:
            raise ValueError("tolerance_ms must be > 0")


def compensate(
    schedule: GrainSchedule, cfg: LatencyConfig
) -> tuple[GrainSchedule, GrainSchedule]:
    """Emission schedules that arrive together after each channel's output delay.

    Each channel is sent early by its own latency, so the perceived onsets
    match the requested ones.
    """
    lead_s = max(cfg.audio_latency_ms, cfg.force_latency_ms) / 1000.0
    for i, g in enumerate(schedule.grains):
        if g.onset_s < lead_s:
            raise NegativeEmissionTime(
                f"grain {i} at {g.onset_s} s would need emitting {lead_s - g.onset_s:.6g} s "
                "before time zero"
            )
    audio = schedule.shifted(-cfg.audio_latency_ms / 1000.0)
    force = schedule.shifted(-cfg.force_latency_ms / 1000.0)
    return audio, force


def apply_channel_delays(
    audio: SampleTrack, force: SampleTrack, cfg: LatencyConfig
) -> tuple[SampleTrack, SampleTrack]:
    """What arrives at the user when each output path adds its latency."""
    return (
        audio.delayed(cfg.audio_latency_ms / 1000.0),
        force.delayed(cfg.force_latency_ms / 1000.0),
    )


def envelope(track: SampleTrack, window_ms: float = ENVELOPE_WINDOW_MS):
    """Rectified, moving-average envelope and the time of each envelope sample.

    Force tracks have their resting level removed first so that only the
    pulses contribute. Rectification is hard-limited: any sample whose
    magnitude exceeds ``ACTIVITY_FLOOR`` of the track peak counts as 1. That
    makes the envelope follow when a channel is active rather than the pulse
    shape, so a slowly rising vibration and a flat carrier burst gated by the
    same impulse line up at zero lag. The boxcar output is timestamped at the
    window centre, which keeps the envelope free of group delay.
    """
    x = np.asarray(track.samples, dtype=np.float64)
    if track.unit is Unit.NEWTONS and x.size:
        x = x - x.min()
    x = np.abs(x)
    peak = x.max() if x.size else 0.0
    if not peak > 0:
        raise SilentTrack(f"{track.unit.value} track is silent")
    active = (x > ACTIVITY_FLOOR * peak).astype(np.float64)
    width = max(1, round(window_ms * track.rate_hz / 1000.0))
    env = np.convolve(active, np.full(width, 1.0 / width), mode="full")
    times = track.start_s + (np.arange(env.size) - (width - 1) / 2.0) / track.rate_hz
    return env, times


def _on_grid(track: SampleTrack, grid: np.ndarray, window_ms: float) -> np.ndarray:
    env, times = envelope(track, window_ms)
    return np.interp(grid, times, env, left=0.0, right=0.0)


def measure_alignment(
    audio: SampleTrack,
    force: SampleTrack,
    *,
    analysis_rate_hz: float = ANALYSIS_RATE_HZ,
    window_ms: float = ENVELOPE_WINDOW_MS,
    max_lag_ms: float = DEFAULT_MAX_LAG_MS,
) -> float:
    """Lag of the force channel behind the audio channel, in milliseconds.

    Positive means the force pulses arrive late. Envelopes of both tracks are
    put on a shared grid, cross-correlated, and the peak is refined by a
    parabola through its neighbours.
    """
    t0 = min(audio.start_s, force.start_s) - window_ms / 1000.0
    t1 = max(audio.end_s, force.end_s) + window_ms / 1000.0
    grid = t0 + np.arange(int(np.ceil((t1 - t0) * analysis_rate_hz)) + 1) / analysis_rate_hz
    ea = _on_grid(audio, grid, window_ms)
    ef = _on_grid(force, grid, window_ms)

    corr = signal.correlate(ef, ea, mode="full", method="fft")
    lags = signal.correlation_lags(ef.size, ea.size, mode="full")
    max_lag = max_lag_ms * analysis_rate_hz / 1000.0
    keep = np.abs(lags) <= max_lag
    corr, lags = corr[keep], lags[keep]
    k = int(np.argmax(corr))
    offset = 0.0
    if 0 < k < corr.size - 1:
        left, mid, right = corr[k - 1], corr[k], corr[k + 1]
        denom = left - 2.0 * mid + right
        if denom < 0:
            offset = 0.5 * (left - right) / denom
    return (lags[k] + offset) * 1000.0 / analysis_rate_hz
