"""Frozen end-to-end output: the demo WAV continued once at seed 42 must
reproduce the golden MIDI byte-for-byte."""

from pathlib import Path

from composeon.cli import main
from conftest import build_demo_wav

GOLDEN = Path(__file__).resolve().parent / "golden" / "demo_seed42.mid"


def test_demo_wav_seed42_matches_golden(tmp_path):
    wav = tmp_path / "demo.wav"
    wav.write_bytes(build_demo_wav())
    out = tmp_path / "out.mid"
    assert main(["continue", "--in", str(wav), "--phrases", "1", "--seed", "42",
                 "--bpm", "120", "--out", str(out)]) == 0
    assert out.read_bytes() == GOLDEN.read_bytes()
