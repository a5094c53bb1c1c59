import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graintouch.errors import CycleFitError, RenderError, UnderSampledCarrier
from graintouch.grain import GrainSchedule, GrainSpec, make_periodic_schedule
from graintouch.harness import pulse_metrics
from graintouch.render import (
    SampleTrack,
    Unit,
    above_baseline_runs,
    count_pulses,
    render_audio_grain,
    render_block_impulse,
    render_force_grain,
    render_tracks,
)

BASE = 0.14


def scalar_force_sample(k, rate, amp, hz, trough, baseline=BASE):
    """Independent per-sample evaluation of the vibratory force profile."""
    cycles = k * hz / rate
    raised = 0.5 - 0.5 * math.cos(2 * math.pi * cycles)
    if cycles > 0.5:
        raised = trough + (1 - trough) * raised
    return baseline + amp * raised


def brute_energy(values, baseline, rate):
    total = 0.0
    for v in values:
        total += (v - baseline) ** 2
    return total / rate


@pytest.mark.parametrize(
    "duration, rate, ones", [(10, 48000, 480), (1, 48000, 48), (100, 8000, 800)]
)
def test_block_impulse_count(duration, rate, ones):
    gate = render_block_impulse(duration, rate, start_offset_samples=7, total_samples=ones + 20)
    assert gate.samples.sum() == ones
    assert np.all(gate.samples[:7] == 0) and np.all(gate.samples[7 : 7 + ones] == 1)
    assert np.all(gate.samples[7 + ones :] == 0)


def test_audio_grain_periods():
    t = render_audio_grain(GrainSpec(duration_ms=100), 48000)
    assert len(t) == 4800
    # 4800 samples at 12 samples per period
    assert len(t) * 4000 / 48000 == 400
    expected = np.array([math.sin(2 * math.pi * 4000 * k / 48000) for k in range(4800)])
    np.testing.assert_allclose(t.samples, expected, atol=1e-12)
    assert t.unit is Unit.NORMALIZED_AUDIO


def test_audio_zero_amplitude_is_silent():
    t = render_audio_grain(GrainSpec(audio_amplitude=0.0), 48000)
    assert not np.any(t.samples)


def test_audio_undersampled():
    with pytest.raises(UnderSampledCarrier):
        render_audio_grain(GrainSpec(), 6000)


def test_audio_peak_bounded_by_amplitude():
    t = render_audio_grain(GrainSpec(audio_amplitude=0.3, audio_carrier_hz=3137), 44100)
    assert np.abs(t.samples).max() <= 0.3


def test_constant_plateau():
    t = render_force_grain(GrainSpec(force_amplitude_n=0.43), BASE, 8000, pad_samples=10)
    assert np.all(t.samples[:10] == BASE) and np.all(t.samples[-10:] == BASE)
    assert np.all(t.samples[10:-10] == BASE + 0.43)
    assert t.samples[10:-10][0] == pytest.approx(0.57, abs=1e-15)


def test_sine_single_hump_matches_scalar_oracle():
    t = render_force_grain(
        GrainSpec(duration_ms=4, force_mode="Sine", force_amplitude_n=1.0), BASE, 8000
    )
    oracle = [scalar_force_sample(k, 8000, 1.0, 250, 0.1) for k in range(32)]
    np.testing.assert_allclose(t.samples, oracle, rtol=0, atol=1e-12)
    assert int(np.argmax(t.samples)) == 16  # 2 ms at 8 kHz
    assert t.samples[16] == pytest.approx(1.14, abs=1e-12)
    assert t.samples[0] == BASE


@pytest.mark.parametrize("trough", [0.0, 0.1, 0.5])
def test_sine_oracle_long_pulse(trough):
    g = GrainSpec(duration_ms=50, force_mode="Sine", force_amplitude_n=0.72)
    t = render_force_grain(g, BASE, 8000, trough_fraction=trough)
    oracle = [scalar_force_sample(k, 8000, 0.72, 250, trough) for k in range(400)]
    np.testing.assert_allclose(t.samples, oracle, rtol=0, atol=1e-12)


def test_sine_too_short():
    with pytest.raises(CycleFitError):
        render_force_grain(GrainSpec(duration_ms=1, force_mode="Sine"), BASE, 8000)


def test_sine_undersampled():
    with pytest.raises(UnderSampledCarrier):
        render_force_grain(GrainSpec(force_mode="Sine", force_sine_hz=250), BASE, 400)


def test_pure_raised_cosine_splits_runs():
    """Without a trough floor the vibration touches baseline each cycle."""
    g = GrainSpec(duration_ms=10, force_mode="Sine")
    pure = render_force_grain(g, BASE, 8000, trough_fraction=0.0)
    floored = render_force_grain(g, BASE, 8000)
    assert len(above_baseline_runs(pure.samples, BASE)) == 3
    assert len(above_baseline_runs(floored.samples, BASE)) == 1


def test_tracks_three_grains():
    s = make_periodic_schedule(3, 1.0, GrainSpec(duration_ms=10, force_amplitude_n=0.43))
    audio, force = render_tracks(s, total_s=3.0)
    assert count_pulses(force, BASE) == 3
    assert len(audio) == 144000 and len(force) == 24000
    runs = above_baseline_runs(force.samples, BASE)
    assert [a for a, _ in runs] == [0, 8000, 16000]
    # silent audio and baseline force after the last grain
    assert not np.any(audio.samples[round(2.01 * 48000) :])
    assert np.all(force.samples[round(2.01 * 8000) :] == BASE)


def test_tracks_empty_schedule():
    audio, force = render_tracks(GrainSchedule(), total_s=1.0)
    assert not np.any(audio.samples)
    assert np.all(force.samples == BASE)


def test_tracks_error_carries_grain_index():
    s = GrainSchedule((GrainSpec(0.0, 10), GrainSpec(0.5, 1, force_mode="Sine")))
    with pytest.raises(RenderError) as info:
        render_tracks(s, total_s=1.0)
    assert info.value.grain_index == 1
    assert isinstance(info.value.cause, CycleFitError)


def test_tracks_reject_sub_sample_gap():
    s = GrainSchedule((GrainSpec(0.0, 10), GrainSpec(0.01001, 10)))
    with pytest.raises(RenderError) as info:
        render_tracks(s, total_s=1.0)
    assert info.value.grain_index == 1


def test_tracks_reject_short_total():
    s = make_periodic_schedule(2, 1.0)
    with pytest.raises(RenderError):
        render_tracks(s, total_s=1.05)


def test_render_deterministic():
    s = make_periodic_schedule(3, 1.0, GrainSpec(duration_ms=50, force_mode="Sine"))
    a1, f1 = render_tracks(s, total_s=3.0)
    a2, f2 = render_tracks(s, total_s=3.0)
    assert a1.samples.tobytes() == a2.samples.tobytes()
    assert f1.samples.tobytes() == f2.samples.tobytes()


@pytest.mark.parametrize("mode", ["Constant", "Sine"])
def test_energy_monotone_against_brute_force(mode):
    rate = 8000
    rms_by_amp = []
    for amp in (0.43, 0.72, 1.00):
        g = GrainSpec(duration_ms=50, force_mode=mode, force_amplitude_n=amp)
        t = render_force_grain(g, BASE, rate)
        rms, energy = pulse_metrics(t, BASE, 0, len(t))
        assert energy == pytest.approx(brute_energy(t.samples, BASE, rate), rel=1e-12)
        rms_by_amp.append(rms)
    assert rms_by_amp[0] < rms_by_amp[1] < rms_by_amp[2]

    energies = []
    for d in (10, 50, 100):
        t = render_force_grain(GrainSpec(duration_ms=d, force_mode=mode), BASE, rate)
        energies.append(brute_energy(t.samples, BASE, rate))
    assert energies[0] < energies[1] < energies[2]


def test_track_unit_invariants():
    with pytest.raises(ValueError):
        SampleTrack(8000, Unit.NEWTONS, [0.1, -0.01])
    with pytest.raises(ValueError):
        SampleTrack(8000, Unit.NORMALIZED_AUDIO, [1.5])
    with pytest.raises(ValueError):
        SampleTrack(0, Unit.NEWTONS, [0.1])
    with pytest.raises(ValueError):
        SampleTrack(8000, Unit.NEWTONS, [float("nan")])


@settings(max_examples=40, deadline=None)
@given(
    amp=st.floats(0.01, 1.0),
    duration=st.floats(4, 100),
    mode=st.sampled_from(["Constant", "Sine"]),
    baseline=st.floats(0, 1),
)
def test_unit_invariants_hold(amp, duration, mode, baseline):
    s = make_periodic_schedule(
        2, 0.2, GrainSpec(duration_ms=duration, force_mode=mode, force_amplitude_n=amp,
                          audio_amplitude=amp),
        baseline,
    )
    audio, force = render_tracks(s, total_s=0.4)
    assert np.abs(audio.samples).max() <= 1.0
    assert np.all(force.samples >= baseline)
    assert count_pulses(force, baseline) == 2
