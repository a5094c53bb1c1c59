import subprocess
import sys

import pytest

from graintouch import formats
from graintouch.cli import main
from graintouch.render import Unit


@pytest.fixture
def rendered(tmp_path):
    assert main(["render", "--out", str(tmp_path), "--duration-ms", "50", "--mode", "Sine"]) == 0
    return tmp_path


def test_render_outputs(rendered):
    schedule = formats.read_schedule(rendered / "schedule.jsonl")
    assert len(schedule) == 3
    assert formats.read_wav(rendered / "audio.wav").unit is Unit.NORMALIZED_AUDIO
    assert formats.read_wav(rendered / "force.wav").unit is Unit.NEWTONS
    assert formats.read_track(rendered / "force.csv").rate_hz == 8000


def test_render_from_schedule(rendered, tmp_path):
    out = tmp_path / "again"
    args = ["render", "--schedule", str(rendered / "schedule.jsonl"), "--out", str(out)]
    assert main(args) == 0
    assert (out / "force.csv").read_bytes() == (rendered / "force.csv").read_bytes()


@pytest.mark.parametrize("interface,key", [("CT", "peak_displacement_m"), ("ksfr", "peak_velocity_deficit")])
def test_simulate(rendered, interface, key, capsys):
    args = ["simulate", "--interface", interface, "--force", str(rendered / "force.csv")]
    assert main(args + ["--out", str(rendered)]) == 0
    assert key in capsys.readouterr().out
    assert formats.read_trace_csv(rendered / "trace.csv").time_s.size == round(3.05 * 8000)


def test_align_pass_and_fail(rendered, tmp_path, capsys):
    audio = str(rendered / "audio.wav")
    assert main(["align", audio, str(rendered / "force.wav")]) == 0
    assert "lag_ms=" in capsys.readouterr().out
    late = formats.read_wav(rendered / "force.wav").delayed(0.005)
    formats.write_wav(tmp_path / "late.wav", late)
    assert main(["align", audio, str(tmp_path / "late.wav")]) == 1
    lag = float(capsys.readouterr().out.strip().split("=")[1])
    assert lag == pytest.approx(5.0, abs=0.25)
    assert main(["align", audio, str(tmp_path / "late.wav"), "--tolerance-ms", "6"]) == 0


def test_stream_loopback_and_file(rendered, tmp_path, capsys):
    base = ["stream", "--audio", str(rendered / "audio.wav"), "--force", str(rendered / "force.wav")]
    assert main(base + ["--frame-ms", "10"]) == 0
    assert "frames_audio=305 frames_force=305" in capsys.readouterr().out
    assert main(base + ["--sink", f"file:{tmp_path / 'f.bin'}"]) == 0
    assert (tmp_path / "f.bin").stat().st_size > 0
    assert main(base + ["--sink", "udp://x"]) == 2


def test_experiment_ct(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("events_per_condition = 1  # short run\n")
    assert main(["--config", str(cfg), "experiment", "--interface", "CT", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "21 reports, 3 exclusions, 0 failures" in out
    assert (tmp_path / "report.jsonl").exists()


def test_seed_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["render", "--seed", "3"])
    assert info.value.code == 2
    assert "deterministic" in capsys.readouterr().err


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed = 4\n")
    assert main(["--config", str(cfg), "render", "--out", str(tmp_path)]) == 2
    cfg.write_text("warp_factor = 9\n")
    assert main(["--config", str(cfg), "render", "--out", str(tmp_path)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_invalid_grain_exits_2(tmp_path, capsys):
    assert main(["render", "--out", str(tmp_path), "--duration-ms", "-5"]) == 2
    assert "error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "graintouch", "--out", str(tmp_path), "render", "--count", "1"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "audio.wav").exists()
