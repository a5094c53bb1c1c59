import io
import math
import socket
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graintouch.errors import BadMagic, FrameError, NonFiniteSample, SinkClosed, TruncatedFrame
from graintouch.protocol import (
    HEADER_SIZE,
    Channel,
    FileSink,
    Frame,
    LoopbackSink,
    Reassembler,
    SocketSink,
    decode_frame,
    encode_frame,
    iter_frames,
    read_frames,
    schedule_frames,
    stream_tracks,
)
from graintouch.render import SampleTrack, Unit


def f32_track(rate, n, unit, seed=0, start=0.0):
    rng = np.random.default_rng(seed)
    low = 0.0 if unit is Unit.NEWTONS else -1.0
    values = rng.uniform(low, 1.0, n).astype(np.float32).astype(np.float64)
    return SampleTrack(rate, unit, values, start)


def test_frame_sizes():
    assert HEADER_SIZE == 17
    assert len(encode_frame(Frame(Channel.AUDIO, 0, 48000, [0.5]))) == 21
    assert len(encode_frame(Frame(Channel.AUDIO, 0, 48000, np.zeros(480)))) == 1937


def test_header_layout():
    data = encode_frame(Frame(Channel.FORCE, 7, 8000, [1.0, 2.0]))
    assert data[:4] == b"GRN1" and data[4] == 1
    assert int.from_bytes(data[5:9], "little") == 7
    assert int.from_bytes(data[9:13], "little") == 8000
    assert int.from_bytes(data[13:17], "little") == 2
    assert np.frombuffer(data[17:], "<f4").tolist() == [1.0, 2.0]


def test_bad_magic():
    data = bytearray(encode_frame(Frame(Channel.AUDIO, 0, 100, [1.0])))
    data[:4] = b"GRN2"
    with pytest.raises(BadMagic):
        decode_frame(bytes(data))


@pytest.mark.parametrize("cut", [2, 10, 17, 20, 24])
def test_truncated(cut):
    data = encode_frame(Frame(Channel.AUDIO, 0, 100, [1.0, 2.0]))
    with pytest.raises(TruncatedFrame):
        decode_frame(data[:cut])


def test_trailing_bytes():
    with pytest.raises(FrameError):
        decode_frame(encode_frame(Frame(Channel.AUDIO, 0, 100, [1.0])) + b"\x00")


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite(bad):
    with pytest.raises(NonFiniteSample):
        Frame(Channel.AUDIO, 0, 100, [0.0, bad])
    data = bytearray(encode_frame(Frame(Channel.AUDIO, 0, 100, [0.0, 0.0])))
    data[21:25] = np.float32(bad).tobytes()
    with pytest.raises(NonFiniteSample):
        decode_frame(bytes(data))


def test_unknown_channel():
    data = bytearray(encode_frame(Frame(Channel.AUDIO, 0, 100, [1.0])))
    data[4] = 9
    with pytest.raises(FrameError):
        decode_frame(bytes(data))


finite_f32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@given(
    channel=st.sampled_from(list(Channel)),
    seq=st.integers(0, 2**32 - 1),
    rate=st.integers(0, 2**32 - 1),
    samples=arrays(np.float32, st.integers(1, 300), elements=finite_f32),
)
def test_round_trip(channel, seq, rate, samples):
    frame = Frame(channel, seq, rate, samples)
    data = encode_frame(frame)
    assert len(data) == 17 + 4 * samples.size
    assert decode_frame(data) == frame
    assert encode_frame(decode_frame(data)) == data


def test_stream_decoders_agree():
    frames = [Frame(Channel(i % 2), i // 2, 1000, np.arange(i + 1)) for i in range(10)]
    blob = b"".join(map(encode_frame, frames))
    assert list(iter_frames(blob)) == frames
    assert list(read_frames(io.BytesIO(blob))) == frames
    with pytest.raises(TruncatedFrame):
        list(read_frames(io.BytesIO(blob[:-1])))


def test_reassembler_rejects_gap():
    r = Reassembler()
    r.add(Frame(Channel.AUDIO, 0, 100, [1.0]))
    with pytest.raises(FrameError):
        r.add(Frame(Channel.AUDIO, 2, 100, [1.0]))


def test_frame_counts():
    audio = SampleTrack(48000, Unit.NORMALIZED_AUDIO, np.zeros(3 * 48000))
    force = SampleTrack(8000, Unit.NEWTONS, np.zeros(3 * 8000))
    sink = LoopbackSink()
    summary = stream_tracks(audio, force, 10.0, sink)
    assert summary.frames_per_channel == {Channel.AUDIO: 300, Channel.FORCE: 300}
    assert summary.total_bytes == 300 * (17 + 1920) + 300 * (17 + 320)


def test_emission_order():
    audio = SampleTrack(48000, Unit.NORMALIZED_AUDIO, np.zeros(4800))
    force = SampleTrack(8000, Unit.NEWTONS, np.zeros(800))
    items = list(schedule_frames(audio, force, 10.0))
    times = [t for t, _ in items]
    assert times == sorted(times)
    # force leads audio at equal timestamps
    assert [f.channel for _, f in items[:4]] == [Channel.FORCE, Channel.AUDIO] * 2


def test_loopback_bitwise():
    audio = f32_track(48000, 48000 + 17, Unit.NORMALIZED_AUDIO, 1)
    force = f32_track(8000, 8000 + 3, Unit.NEWTONS, 2)
    sink = LoopbackSink()
    stream_tracks(audio, force, 1.0, sink, buffer_frames=4)
    got_a = sink.reassembler.track(Channel.AUDIO)
    got_f = sink.reassembler.track(Channel.FORCE)
    assert got_a.samples.tobytes() == audio.samples.tobytes()
    assert got_f.samples.tobytes() == force.samples.tobytes()


class FailingSink(LoopbackSink):
    def __init__(self, limit):
        super().__init__()
        self.limit = limit

    def send(self, data):
        if len(self.frames) >= self.limit:
            raise BrokenPipeError("peer went away")
        super().send(data)


def test_sink_closed_reports_progress():
    audio = SampleTrack(1000, Unit.NORMALIZED_AUDIO, np.zeros(100))
    force = SampleTrack(1000, Unit.NEWTONS, np.zeros(100))
    with pytest.raises(SinkClosed) as info:
        stream_tracks(audio, force, 1.0, FailingSink(12), buffer_frames=2)
    assert info.value.frames_sent == 12
    assert info.value.last_seq == {Channel.FORCE: 5, Channel.AUDIO: 5}


class FakeClock:
    def __init__(self):
        self.now = 100.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, dt):
        self.sleeps.append(dt)
        self.now += dt * 0.5 if len(self.sleeps) % 3 == 0 else dt


def test_paced_never_early_fake_clock():
    clock = FakeClock()
    audio = SampleTrack(1000, Unit.NORMALIZED_AUDIO, np.zeros(500))
    force = SampleTrack(1000, Unit.NEWTONS, np.zeros(500))
    summary = stream_tracks(
        audio, force, 10.0, LoopbackSink(), paced=True, clock=clock, sleep=clock.sleep
    )
    assert len(summary.emissions) == 100
    assert all(emitted >= deadline for deadline, emitted in summary.emissions)
    assert summary.late_frames == 0


def test_paced_never_early_real_clock():
    audio = SampleTrack(8000, Unit.NORMALIZED_AUDIO, np.zeros(1600))
    force = SampleTrack(8000, Unit.NEWTONS, np.zeros(1600))
    summary = stream_tracks(audio, force, 10.0, LoopbackSink(), paced=True)
    assert all(emitted >= deadline for deadline, emitted in summary.emissions)
    assert summary.emissions[-1][0] == pytest.approx(0.19, abs=1e-9)


def test_file_sink(tmp_path):
    audio = f32_track(1000, 250, Unit.NORMALIZED_AUDIO)
    force = f32_track(1000, 250, Unit.NEWTONS, 5)
    sink = FileSink(tmp_path / "frames.bin")
    stream_tracks(audio, force, 5.0, sink)
    sink.close()
    with open(tmp_path / "frames.bin", "rb") as fh:
        frames = list(read_frames(fh))
    assert len(frames) == 100


def test_socket_sink():
    server = socket.socket()
    server.bind(("127.0.0.1", 0))
    server.listen(1)
    received = bytearray()

    def serve():
        conn, _ = server.accept()
        with conn:
            while chunk := conn.recv(65536):
                received.extend(chunk)

    t = threading.Thread(target=serve, daemon=True)
    t.start()
    audio = f32_track(2000, 400, Unit.NORMALIZED_AUDIO)
    force = f32_track(2000, 400, Unit.NEWTONS, 9)
    sink = SocketSink(*server.getsockname())
    stream_tracks(audio, force, 10.0, sink)
    sink.close()
    t.join(5)
    server.close()
    r = Reassembler()
    for f in iter_frames(bytes(received)):
        r.add(f)
    assert r.samples(Channel.FORCE).tobytes() == force.samples.astype("<f4").tobytes()


def test_frame_ms_must_be_positive():
    track = SampleTrack(1000, Unit.NEWTONS, np.zeros(10))
    with pytest.raises(ValueError):
        stream_tracks(track, track, 0.0, LoopbackSink())
