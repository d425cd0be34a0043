"""Shared fixtures: the D-major demo melody (two measures arpeggiating the
D and G triads, starting and ending on D) as a Score, MIDI bytes, and WAV
bytes."""

import io
import wave
from fractions import Fraction

import numpy as np
import pytest

from composeon.corpus import load_corpus
from composeon.midi import export_midi_bytes
from composeon.score import Hand, Measure, Part, Score, note

# (midi, beats): D4 half, F#4, A4, then G4, B4, D4 half
DEMO_NOTES = [(62, 2), (66, 1), (69, 1), (67, 1), (71, 1), (62, 2)]


def build_demo_score(bpm=120) -> Score:
    measures = []
    onset = Fraction(0)
    events = []
    index = 0
    for midi, beats in DEMO_NOTES:
        events.append(note(onset, beats, midi))
        onset += beats
        if onset == 4:
            measures.append(Measure(index, events))
            events, onset, index = [], Fraction(0), index + 1
    return Score([Part(Hand.RIGHT, measures)], bpm=bpm)


def build_demo_midi(bpm=120) -> bytes:
    return export_midi_bytes(build_demo_score(bpm))


def build_demo_wav(bpm=120, sr=22050) -> bytes:
    beat_seconds = 60.0 / bpm
    chunks = []
    for midi, beats in DEMO_NOTES:
        freq = 440.0 * 2 ** ((midi - 69) / 12)
        t = np.arange(int(beats * beat_seconds * sr)) / sr
        chunks.append(0.5 * np.sin(2 * np.pi * freq * t))
    samples = np.concatenate(chunks)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sr)
        w.writeframes((samples * 32767).astype("<i2").tobytes())
    return buf.getvalue()


@pytest.fixture(scope="session")
def corpus_db():
    return load_corpus()


@pytest.fixture(scope="session")
def demo_midi_bytes():
    return build_demo_midi()


@pytest.fixture(scope="session")
def demo_wav_bytes():
    return build_demo_wav()
