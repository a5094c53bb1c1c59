"""File formats: float WAV, CSV tracks and traces, line-delimited JSON.

WAV files are mono RIFF with 32-bit IEEE float samples. The track unit and
start time travel in a LIST/INFO comment (``ICMT``) as
``unit=<unit>;start_s=<seconds>``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .devices import DeviceTrace
from .errors import TrackFormatError
from .grain import GrainSchedule, GrainSpec
from .render import SampleTrack, Unit

WAVE_FORMAT_IEEE_FLOAT = 0x0003
FORCE_CSV_HEADER = "time_s,force_n"
TRACE_CSV_HEADER = "time_s,position_m,velocity_m_per_s,applied_force_n"
GRAIN_FIELDS = (
    "onset_s",
    "duration_ms",
    "audio_carrier_hz",
    "audio_amplitude",
    "force_mode",
    "force_amplitude_n",
    "force_sine_hz",
)


def _chunk(tag: bytes, payload: bytes) -> bytes:
    pad = b"\x00" if len(payload) % 2 else b""
    return tag + struct.pack("<I", len(payload)) + payload + pad


def wav_bytes(track: SampleTrack) -> bytes:
    rate = int(track.rate_hz)
    if rate != track.rate_hz:
        raise TrackFormatError(f"WAV needs an integer sample rate, got {track.rate_hz}")
    data = np.asarray(track.samples, dtype="<f4").tobytes()
    fmt = struct.pack("<HHIIHHH", WAVE_FORMAT_IEEE_FLOAT, 1, rate, rate * 4, 4, 32, 0)
    comment = f"unit={track.unit.value};start_s={track.start_s!r}".encode("ascii") + b"\x00"
    info = _chunk(b"LIST", b"INFO" + _chunk(b"ICMT", comment))
    body = (
        b"WAVE"
        + _chunk(b"fmt ", fmt)
        + _chunk(b"fact", struct.pack("<I", len(track)))
        + info
        + _chunk(b"data", data)
    )
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_wav(path, track: SampleTrack) -> None:
    Path(path).write_bytes(wav_bytes(track))


def _iter_chunks(buf: bytes, pos: int, end: int):
    while pos + 8 <= end:
        tag = buf[pos : pos + 4]
        (size,) = struct.unpack_from("<I", buf, pos + 4)
        body = buf[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise TrackFormatError(f"chunk {tag!r} truncated")
        yield tag, body
        pos += 8 + size + (size & 1)


def parse_wav(buf: bytes) -> SampleTrack:
    if len(buf) < 12 or buf[:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise TrackFormatError("not a RIFF/WAVE file")
    rate = None
    data = None
    unit = Unit.NORMALIZED_AUDIO
    start_s = 0.0
    for tag, body in _iter_chunks(buf, 12, len(buf)):
        if tag == b"fmt ":
            fmt_tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", body)
            if fmt_tag != WAVE_FORMAT_IEEE_FLOAT or bits != 32 or channels != 1:
                raise TrackFormatError(
                    f"only mono 32-bit float WAV is supported (format {fmt_tag}, "
                    f"{channels} ch, {bits} bit)"
                )
        elif tag == b"data":
            data = np.frombuffer(body, dtype="<f4")
        elif tag == b"LIST" and body[:4] == b"INFO":
            for sub, text in _iter_chunks(body, 4, len(body)):
                if sub != b"ICMT":
                    continue
                for item in text.rstrip(b"\x00").decode("ascii").split(";"):
                    key, _, value = item.partition("=")
                    if key == "unit":
                        unit = Unit(value)
                    elif key == "start_s":
                        start_s = float(value)
    if rate is None or data is None:
        raise TrackFormatError("WAV lacks a fmt or data chunk")
    return SampleTrack(rate, unit, data.astype(np.float64), start_s)


def read_wav(path) -> SampleTrack:
    return parse_wav(Path(path).read_bytes())


def _csv_lines(header: str, columns) -> str:
    rows = zip(*(np.asarray(c, dtype=np.float64).tolist() for c in columns))
    return header + "\n" + "".join(",".join(map(repr, row)) + "\n" for row in rows)


def write_force_csv(path, track: SampleTrack) -> None:
    if track.unit is not Unit.NEWTONS:
        raise TrackFormatError("force CSV holds Newton tracks only")
    Path(path).write_text(_csv_lines(FORCE_CSV_HEADER, (track.times(), track.samples)))


def read_force_csv(path) -> SampleTrack:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != FORCE_CSV_HEADER:
        raise TrackFormatError(f"expected header {FORCE_CSV_HEADER!r}")
    table = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    if len(table) < 2:
        raise TrackFormatError("need at least two rows to infer the sample rate")
    t, f = table[:, 0], table[:, 1]
    rate = round((len(t) - 1) / (t[-1] - t[0]))
    return SampleTrack(rate, Unit.NEWTONS, f, float(t[0]))


def write_trace_csv(path, trace: DeviceTrace) -> None:
    cols = (trace.time_s, trace.position_m, trace.velocity_m_per_s, trace.applied_force_n)
    Path(path).write_text(_csv_lines(TRACE_CSV_HEADER, cols))


def read_trace_csv(path) -> DeviceTrace:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != TRACE_CSV_HEADER:
        raise TrackFormatError(f"expected header {TRACE_CSV_HEADER!r}")
    table = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    table = table.reshape(-1, 4)
    return DeviceTrace(*(table[:, i].copy() for i in range(4)))


def read_track(path) -> SampleTrack:
    """Load a track from ``.wav`` or force ``.csv`` by extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".wav":
        return read_wav(path)
    if suffix == ".csv":
        return read_force_csv(path)
    raise TrackFormatError(f"unsupported track file {path}")


def grain_record(g: GrainSpec) -> dict:
    rec = {name: getattr(g, name) for name in GRAIN_FIELDS}
    rec["force_mode"] = g.force_mode.value
    return rec


def dumps_schedule(schedule: GrainSchedule) -> str:
    header = {"baseline_force_n": schedule.baseline_force_n, "label": schedule.label}
    lines = [json.dumps(header)]
    lines += [json.dumps(grain_record(g)) for g in schedule.grains]
    return "\n".join(lines) + "\n"


def loads_schedule(text: str) -> GrainSchedule:
    records = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
    if not records or "baseline_force_n" not in records[0]:
        raise TrackFormatError("schedule must start with a header record")
    header, grains = records[0], records[1:]
    specs = []
    for i, rec in enumerate(grains, 1):
        missing = set(GRAIN_FIELDS) - set(rec)
        if missing:
            raise TrackFormatError(f"record {i} lacks {sorted(missing)}")
        specs.append(GrainSpec(**{k: rec[k] for k in GRAIN_FIELDS}))
    return GrainSchedule(tuple(specs), header["baseline_force_n"], header.get("label", ""))


def write_schedule(path, schedule: GrainSchedule) -> None:
    Path(path).write_text(dumps_schedule(schedule))


def read_schedule(path) -> GrainSchedule:
    return loads_schedule(Path(path).read_text())


__all__ = [
    "dumps_schedule",
    "loads_schedule",
    "parse_wav",
    "read_force_csv",
    "read_schedule",
    "read_trace_csv",
    "read_track",
    "read_wav",
    "wav_bytes",
    "write_force_csv",
    "write_schedule",
    "write_trace_csv",
    "write_wav",
]
