"""Fixed-layout sample frames and a paced two-channel streamer.

Frame layout (little-endian)::

    magic "GRN1" [4] | channel [1] | seq u32 [4] | rate_hz u32 [4] |
    n_samples u32 [4] | n_samples x float32

Transport is assumed reliable and ordered; there is no retransmission.
"""

from __future__ import annotations

import enum
import heapq
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from typing import BinaryIO, Callable, Iterator

import numpy as np

from .errors import BadMagic, FrameError, NonFiniteSample, SinkClosed, TruncatedFrame
from .render import SampleTrack, Unit

MAGIC = b"GRN1"
HEADER = struct.Struct("<4sBIII")
HEADER_SIZE = HEADER.size  # 17
U32_MAX = 0xFFFFFFFF


class Channel(enum.IntEnum):
    AUDIO = 0
    FORCE = 1


@dataclass(frozen=True, eq=False)
class Frame:
    channel: Channel
    seq: int
    rate_hz: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype="<f4")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel", Channel(self.channel))
        if samples.ndim != 1 or samples.size < 1:
            raise FrameError("a frame carries at least one sample")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSample("frame samples must be finite")
        for name in ("seq", "rate_hz"):
            value = getattr(self, name)
            if not 0 <= value <= U32_MAX:
                raise FrameError(f"{name}={value} does not fit in u32")

    @property
    def n_samples(self) -> int:
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.channel == other.channel
            and self.seq == other.seq
            and self.rate_hz == other.rate_hz
            and self.samples.tobytes() == other.samples.tobytes()
        )

    __hash__ = None


def encode_frame(f: Frame) -> bytes:
    return HEADER.pack(MAGIC, f.channel, f.seq, f.rate_hz, f.n_samples) + f.samples.tobytes()


def _parse_header(buf) -> tuple[Channel, int, int, int]:
    if len(buf) < 4:
        raise TruncatedFrame(f"{len(buf)} bytes is shorter than the magic tag")
    if bytes(buf[:4]) != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {bytes(buf[:4])!r}")
    if len(buf) < HEADER_SIZE:
        raise TruncatedFrame(f"{len(buf)} bytes is shorter than the {HEADER_SIZE}-byte header")
    _, channel, seq, rate, n = HEADER.unpack_from(buf)
    try:
        channel = Channel(channel)
    except ValueError:
        raise FrameError(f"unknown channel {channel}") from None
    if n < 1:
        raise FrameError("n_samples must be >= 1")
    return channel, seq, rate, n


def _build(channel, seq, rate, payload) -> Frame:
    samples = np.frombuffer(payload, dtype="<f4")
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSample(f"{channel.name} frame {seq} carries a non-finite sample")
    return Frame(channel, seq, rate, samples)


def decode_frame(buf: bytes) -> Frame:
    """Inverse of :func:`encode_frame`; ``buf`` must hold exactly one frame."""
    channel, seq, rate, n = _parse_header(buf)
    size = HEADER_SIZE + 4 * n
    if len(buf) < size:
        raise TruncatedFrame(f"frame declares {n} samples but only {len(buf)} of {size} bytes arrived")
    if len(buf) > size:
        raise FrameError(f"{len(buf) - size} trailing bytes after frame")
    return _build(channel, seq, rate, buf[HEADER_SIZE:size])


def iter_frames(buf: bytes) -> Iterator[Frame]:
    """Decode back-to-back frames from a byte buffer."""
    view = memoryview(buf)
    pos = 0
    while pos < len(view):
        channel, seq, rate, n = _parse_header(view[pos:])
        end = pos + HEADER_SIZE + 4 * n
        if end > len(view):
            raise TruncatedFrame(f"frame at byte {pos} runs past the end of the buffer")
        yield _build(channel, seq, rate, view[pos + HEADER_SIZE : end])
        pos = end


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    parts = []
    while n:
        chunk = stream.read(n)
        if not chunk:
            break
        parts.append(chunk)
        n -= len(chunk)
    return b"".join(parts)


def read_frames(stream: BinaryIO) -> Iterator[Frame]:
    """Decode frames from a file-like byte stream until EOF."""
    while True:
        head = _read_exact(stream, HEADER_SIZE)
        if not head:
            return
        channel, seq, rate, n = _parse_header(head)
        payload = _read_exact(stream, 4 * n)
        if len(payload) < 4 * n:
            raise TruncatedFrame(f"{channel.name} frame {seq} cut short")
        yield _build(channel, seq, rate, payload)


class Reassembler:
    """Collects frames per channel and rebuilds contiguous tracks.

    Enforces the per-channel sequence contract: strictly increasing, no gaps.
    """

    def __init__(self):
        self._chunks: dict[Channel, list[np.ndarray]] = {c: [] for c in Channel}
        self._rate: dict[Channel, int] = {}
        self._next_seq: dict[Channel, int] = {}

    def add(self, frame: Frame) -> None:
        ch = frame.channel
        expected = self._next_seq.get(ch, frame.seq if not self._chunks[ch] else None)
        if frame.seq != expected:
            raise FrameError(f"{ch.name} seq {frame.seq}, expected {expected}")
        if self._rate.setdefault(ch, frame.rate_hz) != frame.rate_hz:
            raise FrameError(f"{ch.name} rate changed mid-stream")
        self._chunks[ch].append(frame.samples)
        self._next_seq[ch] = frame.seq + 1

    def samples(self, channel: Channel) -> np.ndarray:
        chunks = self._chunks[channel]
        return np.concatenate(chunks) if chunks else np.zeros(0, dtype="<f4")

    def track(self, channel: Channel, start_s: float = 0.0) -> SampleTrack:
        unit = Unit.NEWTONS if channel is Channel.FORCE else Unit.NORMALIZED_AUDIO
        return SampleTrack(self._rate[channel], unit, self.samples(channel), start_s)


class LoopbackSink:
    """In-process sink that decodes every frame it is given."""

    def __init__(self):
        self.frames: list[Frame] = []
        self.bytes_received = 0
        self.reassembler = Reassembler()

    def send(self, data: bytes) -> None:
        frame = decode_frame(data)
        self.reassembler.add(frame)
        self.frames.append(frame)
        self.bytes_received += len(data)

    def close(self):
        pass


class FileSink:
    def __init__(self, path):
        self._fh = open(path, "wb")

    def send(self, data: bytes) -> None:
        if self._fh.closed:
            raise SinkClosed({}, 0)
        self._fh.write(data)

    def close(self):
        self._fh.close()


class SocketSink:
    """TCP client sink."""

    def __init__(self, host: str, port: int, timeout: float | None = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)

    def send(self, data: bytes) -> None:
        self._sock.sendall(data)

    def close(self):
        try:
            self._sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self._sock.close()


@dataclass
class StreamSummary:
    frames_per_channel: dict[Channel, int] = field(default_factory=dict)
    total_bytes: int = 0
    paced: bool = False
    late_frames: int = 0
    max_lateness_s: float = 0.0
    # (deadline, emitted) pairs in paced mode, clock seconds since stream start
    emissions: list[tuple[float, float]] = field(default_factory=list, repr=False)


def _frames_for(track: SampleTrack, channel: Channel, frame_ms: float):
    rate = int(track.rate_hz)
    if rate != track.rate_hz:
        raise FrameError(f"frames carry integer rates, got {track.rate_hz}")
    per_frame = round(frame_ms * rate / 1000.0)
    if per_frame < 1:
        raise FrameError(f"{frame_ms} ms is shorter than one sample at {rate} Hz")
    rank = 0 if channel is Channel.FORCE else 1
    samples = np.asarray(track.samples)
    for seq, first in enumerate(range(0, samples.size, per_frame)):
        t = track.start_s + first / rate
        # force before audio at equal timestamps; ns rounding absorbs float noise
        yield (round(t * 1e9), rank, seq), Frame(channel, seq, rate, samples[first : first + per_frame])


def schedule_frames(audio: SampleTrack, force: SampleTrack, frame_ms: float):
    """``(time_s, Frame)`` for both tracks, merged in emission order."""
    merged = heapq.merge(
        _frames_for(audio, Channel.AUDIO, frame_ms),
        _frames_for(force, Channel.FORCE, frame_ms),
        key=lambda item: item[0],
    )
    for key, frame in merged:
        yield key[0] / 1e9, frame


_DONE = object()


def stream_tracks(
    audio: SampleTrack,
    force: SampleTrack,
    frame_ms: float,
    sink,
    *,
    paced: bool = False,
    buffer_frames: int = 64,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
) -> StreamSummary:
    """Chunk both tracks into frames and push them to ``sink`` in time order.

    A producer thread encodes frames into a bounded queue and blocks when it
    is full; the calling thread drains it into ``sink.send``. In paced mode a
    frame is never sent before its real-time deadline (stream start plus the
    frame's offset); frames sent more than one frame period late are counted.
    """
    if not frame_ms > 0:
        raise ValueError("frame_ms must be > 0")
    buf: queue.Queue = queue.Queue(maxsize=max(1, buffer_frames))
    stop = threading.Event()
    failure: list[BaseException] = []

    def produce():
        try:
            for t, frame in schedule_frames(audio, force, frame_ms):
                item = (t, frame.channel, frame.seq, encode_frame(frame))
                while not stop.is_set():
                    try:
                        buf.put(item, timeout=0.05)
                        break
                    except queue.Full:
                        continue
                if stop.is_set():
                    return
        except BaseException as exc:  # surfaced in the consumer
            failure.append(exc)
        finally:
            while not stop.is_set():
                try:
                    buf.put(_DONE, timeout=0.05)
                    break
                except queue.Full:
                    continue

    producer = threading.Thread(target=produce, name="frame-producer", daemon=True)
    summary = StreamSummary({c: 0 for c in Channel}, paced=paced)
    last_seq: dict[Channel, int | None] = {c: None for c in Channel}
    period = frame_ms / 1000.0
    t_first = None
    wall0 = clock()
    producer.start()
    try:
        while True:
            item = buf.get()
            if item is _DONE:
                break
            t, channel, seq, data = item
            if paced:
                if t_first is None:
                    t_first = t
                deadline = wall0 + (t - t_first)
                now = clock()
                while now < deadline:
                    sleep(deadline - now)
                    now = clock()
                lateness = now - deadline
                summary.emissions.append((deadline - wall0, now - wall0))
                summary.max_lateness_s = max(summary.max_lateness_s, lateness)
                if lateness > period:
                    summary.late_frames += 1
            try:
                sink.send(data)
            except (SinkClosed, OSError) as exc:
                raise SinkClosed(dict(last_seq), sum(summary.frames_per_channel.values())) from exc
            last_seq[channel] = seq
            summary.frames_per_channel[channel] += 1
            summary.total_bytes += len(data)
    finally:
        stop.set()
        producer.join(timeout=5.0)
    if failure:
        raise failure[0]
    return summary
