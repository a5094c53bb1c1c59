"""Plant models for the two fingerpad force-delivery setups.

CT: a flat surface strapped to the fingerpad pushes perpendicular to it. The
finger mount is a linear mass-spring-damper driven by the force track.

KSFR: the finger slides over a surface whose rendered force opposes the
direction of motion. The user keeps trying to move at an intended speed,
modelled as a proportional drive on the velocity error.

Both use semi-implicit Euler (velocity first), sub-stepped so that each
force sample is held for an integer number of steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnstableIntegration
from .kernels import get_backend
from .render import SampleTrack, Unit


@dataclass(frozen=True)
class CTParams:
    mass_kg: float = 0.02
    stiffness_n_per_m: float = 500.0
    damping_ns_per_m: float = 2.0
    dt_s: float = 1.0 / 8000.0

    def __post_init__(self):
        for name in ("mass_kg", "stiffness_n_per_m", "damping_ns_per_m", "dt_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def natural_frequency_rad_s(self) -> float:
        return math.sqrt(self.stiffness_n_per_m / self.mass_kg)

    @property
    def damping_ratio(self) -> float:
        return self.damping_ns_per_m / (2.0 * math.sqrt(self.stiffness_n_per_m * self.mass_kg))

    @property
    def time_constant_s(self) -> float:
        """Decay time constant of the oscillation envelope, 2m/c."""
        return 2.0 * self.mass_kg / self.damping_ns_per_m


@dataclass(frozen=True)
class KSFRParams:
    mass_kg: float = 0.2
    intended_velocity_m_per_s: float = 0.1
    recovery_gain_n_per_m_per_s: float = 8.0
    dt_s: float = 1.0 / 8000.0

    def __post_init__(self):
        if not self.mass_kg > 0:
            raise ValueError("mass_kg must be > 0")
        if not self.dt_s > 0:
            raise ValueError("dt_s must be > 0")
        if not self.recovery_gain_n_per_m_per_s >= 0:
            raise ValueError("recovery_gain_n_per_m_per_s must be >= 0")


@dataclass(frozen=True, eq=False)
class DeviceTrace:
    time_s: np.ndarray
    position_m: np.ndarray
    velocity_m_per_s: np.ndarray
    applied_force_n: np.ndarray

    def __post_init__(self):
        n = len(self.time_s)
        for name in ("position_m", "velocity_m_per_s", "applied_force_n"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} samples, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite values")

    def __len__(self):
        return len(self.time_s)

    def peak_displacement(self) -> float:
        return float(np.max(self.position_m, initial=0.0))

    def peak_velocity_deficit(self, intended_velocity: float) -> float:
        """Largest shortfall of speed along the intended direction."""
        direction = 1.0 if intended_velocity >= 0 else -1.0
        return float(np.max(abs(intended_velocity) - direction * self.velocity_m_per_s, initial=0.0))


def _substeps(rate_hz: float, dt_s: float) -> int:
    ratio = 1.0 / (rate_hz * dt_s)
    steps = round(ratio)
    if steps < 1 or abs(ratio - steps) > 1e-9 * ratio:
        raise ValueError(
            f"dt_s={dt_s} must divide the force sample period 1/{rate_hz:g} s"
        )
    return steps


def _check_force(force: SampleTrack) -> None:
    if force.unit is not Unit.NEWTONS:
        raise ValueError(f"device input must be in Newtons, got {force.unit.value}")


def simulate_ct(
    force: SampleTrack,
    p: CTParams | None = None,
    *,
    baseline_n: float | None = None,
    backend: str | None = None,
) -> DeviceTrace:
    """Perpendicular pushes on a sprung fingerpad, starting at rest.

    The rest point is the equilibrium under ``baseline_n`` (default: the
    smallest force in the track); positions are reported relative to it.
    """
    p = CTParams() if p is None else p
    _check_force(force)
    steps = _substeps(force.rate_hz, p.dt_s)
    if baseline_n is None:
        baseline_n = float(force.samples.min()) if len(force) else 0.0
    pos, vel, bad = get_backend(backend).ct_integrate(
        force.samples,
        float(baseline_n),
        p.mass_kg,
        p.stiffness_n_per_m,
        p.damping_ns_per_m,
        p.dt_s,
        steps,
    )
    if bad >= 0:
        raise UnstableIntegration(f"CT state diverged at sample {bad}")
    return DeviceTrace(force.times(), pos, vel, np.array(force.samples))


def simulate_ksfr(
    force: SampleTrack,
    p: KSFRParams | None = None,
    *,
    baseline_n: float | None = None,
    backend: str | None = None,
) -> DeviceTrace:
    """Sliding finger slowed by a force opposing its motion.

    Only the part of ``force`` above ``baseline_n`` (default: track minimum)
    opposes the slide; the resting contact force does not.
    """
    p = KSFRParams() if p is None else p
    _check_force(force)
    steps = _substeps(force.rate_hz, p.dt_s)
    if baseline_n is None:
        baseline_n = float(force.samples.min()) if len(force) else 0.0
    opposing = np.maximum(force.samples - baseline_n, 0.0)
    v_intent = p.intended_velocity_m_per_s
    pos, vel, bad = get_backend(backend).ksfr_integrate(
        opposing, v_intent, v_intent, p.mass_kg, p.recovery_gain_n_per_m_per_s, p.dt_s, steps
    )
    if bad >= 0:
        raise UnstableIntegration(f"KSFR state diverged at sample {bad}")
    applied = -np.sign(vel) * opposing
    return DeviceTrace(force.times(), pos, vel, applied + 0.0)
