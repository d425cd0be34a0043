import subprocess
import sys

import pytest

from composeon.cli import main
from conftest import build_demo_midi, build_demo_wav


@pytest.fixture()
def demo_mid(tmp_path):
    path = tmp_path / "demo.mid"
    path.write_bytes(build_demo_midi())
    return path


@pytest.fixture()
def demo_wav(tmp_path):
    path = tmp_path / "demo.wav"
    path.write_bytes(build_demo_wav())
    return path


class TestAnalyze:
    def test_demo_wav(self, demo_wav, capsys):
        assert main(["analyze", "--in", str(demo_wav), "--bpm", "120"]) == 0
        out = capsys.readouterr().out
        assert "Key: D major" in out
        assert "Degrees: I IV" in out

    def test_demo_midi(self, demo_mid, capsys):
        assert main(["analyze", "--in", str(demo_mid)]) == 0
        out = capsys.readouterr().out
        assert "Key: D major" in out
        assert "Chords: D G" in out

    def test_missing_file_exit_3(self, tmp_path, capsys):
        assert main(["analyze", "--in", str(tmp_path / "missing.mid")]) == 3
        assert "input error" in capsys.readouterr().err

    def test_garbage_file_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.mid"
        bad.write_bytes(b"MThx not really midi")
        assert main(["analyze", "--in", str(bad)]) == 3

    def test_pitch_csv_dump(self, demo_wav, tmp_path, capsys):
        csv_path = tmp_path / "track.csv"
        assert main(["analyze", "--in", str(demo_wav), "--bpm", "120",
                     "--dump-pitch-csv", str(csv_path)]) == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "time,f0,confidence"
        assert len(lines) > 10


class TestContinue:
    def test_writes_midi_and_report(self, demo_mid, tmp_path, capsys):
        out = tmp_path / "out.mid"
        report = tmp_path / "report.md"
        code = main(["continue", "--in", str(demo_mid), "--phrases", "1",
                     "--seed", "42", "--out", str(out), "--report", str(report),
                     "--level", "intermediate"])
        assert code == 0
        from composeon.midi import parse_smf
        doc = parse_smf(out.read_bytes())
        assert len(doc.tracks) == 3
        text = report.read_text()
        assert "## Phrase 1" in text
        for aspect in ("Chords", "Rhythm", "Embellishment"):
            assert f"### {aspect}" in text
        assert "[[" not in text  # links rendered as emphasis

    def test_deterministic_across_runs(self, demo_mid, tmp_path):
        outs = []
        for name in ("a.mid", "b.mid"):
            out = tmp_path / name
            assert main(["continue", "--in", str(demo_mid), "--phrases", "2",
                         "--seed", "42", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_zero_phrases_cadence_only(self, demo_mid, tmp_path):
        out = tmp_path / "out.mid"
        assert main(["continue", "--in", str(demo_mid), "--phrases", "0",
                     "--seed", "1", "--out", str(out)]) == 0
        from composeon.midi import parse_smf, smf_to_score
        doc = parse_smf(out.read_bytes())
        # input (2 measures) + final cadence measure only = 3 measures
        ticks = [e.tick for e in doc.tracks[1] if hasattr(e, "pitch")]
        assert max(ticks) == 3 * 4 * 480

    def test_config_file_merged_under_flags(self, demo_mid, tmp_path):
        config = tmp_path / "composeon.conf"
        config.write_text("seed = 7\nphrases = 1\n# comment\nlevel = beginner\n")
        out_a = tmp_path / "a.mid"
        assert main(["continue", "--in", str(demo_mid), "--config", str(config),
                     "--out", str(out_a)]) == 0
        # flag overrides file
        out_b = tmp_path / "b.mid"
        assert main(["continue", "--in", str(demo_mid), "--config", str(config),
                     "--seed", "8", "--out", str(out_b)]) == 0
        out_c = tmp_path / "c.mid"
        assert main(["continue", "--in", str(demo_mid), "--phrases", "1",
                     "--seed", "7", "--out", str(out_c)]) == 0
        assert out_a.read_bytes() == out_c.read_bytes()
        assert out_a.read_bytes() != out_b.read_bytes()

    def test_usage_error_exit_2(self, demo_mid):
        with pytest.raises(SystemExit) as err:
            main(["continue", "--in", str(demo_mid)])  # missing --out
        assert err.value.code == 2

    def test_help_prints_flags(self):
        reply = subprocess.run(
            [sys.executable, "-m", "composeon.cli", "continue", "--help"],
            capture_output=True, text=True)
        assert reply.returncode == 0
        for flag in ("--in", "--phrases", "--seed", "--bpm", "--level", "--out", "--report"):
            assert flag in reply.stdout


class TestServe:
    def test_busy_port_nonzero_exit(self):
        import socket
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.listen(1)
        try:
            reply = subprocess.run(
                [sys.executable, "-m", "composeon.cli", "serve", "--port", str(port)],
                capture_output=True, text=True, timeout=30)
            assert reply.returncode != 0
        finally:
            sock.close()

    def test_serve_health_check(self, tmp_path):
        import socket
        import time
        import urllib.request
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        proc = subprocess.Popen(
            [sys.executable, "-m", "composeon.cli", "serve", "--port", str(port),
             "--data-dir", str(tmp_path)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        try:
            deadline = time.time() + 20
            body = None
            while time.time() < deadline:
                try:
                    with urllib.request.urlopen(
                            f"http://127.0.0.1:{port}/api/v1/health", timeout=1) as reply:
                        body = reply.read().decode()
                    break
                except Exception:
                    time.sleep(0.2)
            assert body is not None and "ok" in body
        finally:
            proc.terminate()
            proc.wait(timeout=10)
