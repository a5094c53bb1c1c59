"""Command-line entry point: ``graintouch <render|simulate|experiment|align|stream>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import formats
from .config import load_config
from .devices import simulate_ct, simulate_ksfr
from .errors import GrainTouchError
from .grain import GrainSpec, make_periodic_schedule
from .harness import run_grid
from .protocol import Channel, FileSink, LoopbackSink, SocketSink, stream_tracks
from .render import render_tracks
from .sync import measure_alignment


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="key = value config file")
    parser.add_argument(
        "--out", default=default if suppress else "out", help="output directory (default: out)"
    )
    parser.add_argument("--seed", default=default, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graintouch",
        description="Granular audio with synchronized haptic force pulses.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render audio and force tracks for a schedule")
    _global_flags(p, suppress=True)
    p.add_argument("--schedule", help="JSONL schedule; overrides the template flags")
    p.add_argument("--duration-ms", type=float, default=100.0)
    p.add_argument("--amplitude", type=float, default=1.0, help="force amplitude in N")
    p.add_argument("--mode", choices=["Constant", "Sine"], default="Constant")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--interval", type=float, help="onset interval in s")
    p.add_argument("--total-s", type=float, help="track length in s")

    p = sub.add_parser("simulate", help="run a device model on a force track")
    _global_flags(p, suppress=True)
    p.add_argument("--interface", choices=["CT", "KSFR"], type=str.upper, required=True)
    p.add_argument("--force", required=True, help="force track (.wav or .csv)")

    p = sub.add_parser("experiment", help="run the pilot condition grid")
    _global_flags(p, suppress=True)
    p.add_argument("--interface", choices=["CT", "KSFR", "all"], default="all")

    p = sub.add_parser("align", help="measure force-vs-audio lag")
    _global_flags(p, suppress=True)
    p.add_argument("audio", help="audio track (.wav)")
    p.add_argument("force", help="force track (.wav or .csv)")
    p.add_argument("--tolerance-ms", type=float)

    p = sub.add_parser("stream", help="stream two tracks as frames to a sink")
    _global_flags(p, suppress=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--force", required=True)
    p.add_argument("--frame-ms", type=float)
    p.add_argument("--paced", action="store_true", help="emit in real time")
    p.add_argument(
        "--sink",
        default="loopback",
        help="loopback | file:PATH | tcp://HOST:PORT (default: loopback)",
    )
    return parser


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_render(args, cfg) -> int:
    if args.schedule:
        schedule = formats.read_schedule(args.schedule)
    else:
        template = GrainSpec(
            duration_ms=args.duration_ms,
            audio_carrier_hz=cfg.audio_carrier_hz,
            audio_amplitude=cfg.audio_amplitude,
            force_mode=args.mode,
            force_amplitude_n=args.amplitude,
            force_sine_hz=cfg.force_sine_hz,
        )
        interval = cfg.onset_interval_s if args.interval is None else args.interval
        schedule = make_periodic_schedule(
            args.count, interval, template, cfg.baseline_force_n, start_s=cfg.lead_in_s
        )
    total = args.total_s
    if total is None:
        total = max(schedule.end_s, cfg.lead_in_s + len(schedule) * cfg.onset_interval_s)
    audio, force = render_tracks(
        schedule,
        cfg.audio_rate_hz,
        cfg.force_rate_hz,
        total,
        trough_fraction=cfg.vibration_trough_fraction,
    )
    out = _out(args)
    formats.write_schedule(out / "schedule.jsonl", schedule)
    formats.write_wav(out / "audio.wav", audio)
    formats.write_wav(out / "force.wav", force)
    formats.write_force_csv(out / "force.csv", force)
    print(f"rendered {len(schedule)} grains, {total:g} s -> {out}")
    return 0


def cmd_simulate(args, cfg) -> int:
    force = formats.read_track(args.force)
    if args.interface == "CT":
        trace = simulate_ct(force, cfg.ct(), baseline_n=cfg.baseline_force_n)
        peak = f"peak_displacement_m={trace.peak_displacement()!r}"
    else:
        p = cfg.ksfr()
        trace = simulate_ksfr(force, p, baseline_n=cfg.baseline_force_n)
        peak = f"peak_velocity_deficit_m_per_s={trace.peak_velocity_deficit(p.intended_velocity_m_per_s)!r}"
    path = _out(args) / "trace.csv"
    formats.write_trace_csv(path, trace)
    print(peak)
    return 0


def cmd_experiment(args, cfg) -> int:
    interfaces = None if args.interface == "all" else [args.interface]
    result = run_grid(cfg, interfaces, _out(args))
    sys.stdout.write(result.summary_table())
    return 1 if result.failures else 0


def cmd_align(args, cfg) -> int:
    lag = measure_alignment(formats.read_track(args.audio), formats.read_track(args.force))
    print(f"lag_ms={lag:.4f}")
    tolerance = cfg.tolerance_ms if args.tolerance_ms is None else args.tolerance_ms
    return 0 if abs(lag) <= tolerance else 1


def _open_sink(spec: str):
    if spec == "loopback":
        return LoopbackSink()
    if spec.startswith("file:"):
        return FileSink(spec[5:])
    if spec.startswith("tcp://"):
        host, _, port = spec[6:].rpartition(":")
        return SocketSink(host, int(port))
    raise ValueError(f"unknown sink {spec!r}")


def cmd_stream(args, cfg) -> int:
    audio = formats.read_track(args.audio)
    force = formats.read_track(args.force)
    frame_ms = cfg.frame_ms if args.frame_ms is None else args.frame_ms
    sink = _open_sink(args.sink)
    try:
        summary = stream_tracks(
            audio, force, frame_ms, sink, paced=args.paced, buffer_frames=cfg.stream_buffer_frames
        )
    finally:
        sink.close()
    print(
        f"frames_audio={summary.frames_per_channel[Channel.AUDIO]} "
        f"frames_force={summary.frames_per_channel[Channel.FORCE]} "
        f"bytes={summary.total_bytes} late={summary.late_frames}"
    )
    return 0


COMMANDS = {
    "render": cmd_render,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "align": cmd_align,
    "stream": cmd_stream,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        parser.error("--seed is not accepted: every command is deterministic")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (GrainTouchError, ValueError, OSError) as exc:
        print(f"graintouch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
