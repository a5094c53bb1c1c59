"""Granular audio rendered with a one-to-one haptic force-pulse channel.

Submodules: ``grain`` (value types), ``render`` (sample-accurate tracks),
``sync`` (latency compensation and lag measurement), ``devices`` (CT and
KSFR plant models), ``harness`` (the pilot condition grid), ``formats`` and
``protocol`` (files and streaming), ``cli``.
"""

from .grain import (
    ForceMode,
    GrainSchedule,
    GrainSpec,
    cycle_fit_check,
    make_periodic_schedule,
    validate_grain,
    vibratory_cycle_count,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .render import SampleTrack, Unit, render_audio_grain, render_force_grain, render_tracks

__version__ = "0.1.0"

__all__ = [
    "ForceMode",
    "GrainSchedule",
    "GrainSpec",
    "KERNEL_BACKEND",
    "SampleTrack",
    "Unit",
    "cycle_fit_check",
    "make_periodic_schedule",
    "render_audio_grain",
    "render_force_grain",
    "render_tracks",
    "validate_grain",
    "vibratory_cycle_count",
]
