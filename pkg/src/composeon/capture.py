"""Audio capture pipeline: WAV decode -> YIN pitch tracking -> note
segmentation -> grid quantization -> Score.

The YIN kernel implements the classic recipe: difference function,
cumulative mean normalized difference (CMND), absolute threshold with
local-minimum descent, and parabolic interpolation of the chosen lag.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import CaptureCancelled, MalformedRiff, NoNotesDetected, UnsupportedEncoding
from .midi import notes_to_score
from .score import Score

MIN_QUANTIZED_BEATS = Fraction(1, 4)


@dataclass(frozen=True)
class CaptureConfig:
    frame_size: int = 2048
    hop_size: int = 256
    threshold: float = 0.15
    silence_rms: float = 0.01
    fmin: float = 70.0
    fmax: float = 1000.0
    min_note_ms: float = 80.0
    median_width: int = 5


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray  # mono, float64 in [-1, 1]
    sample_rate: int


@dataclass(frozen=True)
class PitchFrame:
    time: float  # seconds, frame center
    f0: float | None
    confidence: float
    rms: float

    @property
    def voiced(self) -> bool:
        return self.f0 is not None


@dataclass(frozen=True)
class PitchTrack:
    frames: tuple[PitchFrame, ...]
    hop_seconds: float


@dataclass(frozen=True)
class RawNote:
    start: float
    end: float
    midi_number: int


def frequency_to_midi(f0: float) -> int:
    """Standard equal-temperament mapping, A4 = 440 Hz = 69."""
    return int(math.floor(69 + 12 * math.log2(f0 / 440.0) + 0.5))


# ---------------------------------------------------------------------------
# WAV decoding
# ---------------------------------------------------------------------------

def decode_wav(data: bytes) -> AudioBuffer:
    """RIFF/WAVE PCM16 or float32, 1-2 channels; stereo is averaged to mono."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedRiff("not a RIFF/WAVE container")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise MalformedRiff(f"chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if size < 16:
                raise MalformedRiff("fmt chunk too small")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or payload is None:
        raise MalformedRiff("missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels; only mono/stereo supported")
    if not 8000 <= sample_rate <= 192000:
        raise UnsupportedEncoding(f"sample rate {sample_rate} out of range")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedEncoding(
            f"format code {audio_format} at {bits} bits; need PCM16 or float32"
        )
    if channels == 2:
        samples = samples[: len(samples) // 2 * 2].reshape(-1, 2).mean(axis=1)
    return AudioBuffer(samples, sample_rate)


# ---------------------------------------------------------------------------
# YIN
# ---------------------------------------------------------------------------

def yin_frame(frame: np.ndarray, sample_rate: int,
              config: CaptureConfig = CaptureConfig()) -> tuple[float | None, float]:
    """Single-frame YIN estimate: (f0 in Hz or None, confidence in [0, 1])."""
    n = len(frame)
    max_period = sample_rate / config.fmin
    if n < 2 * max_period:
        raise ValueError(f"frame of {n} samples too short for fmin {config.fmin}")
    frame = np.asarray(frame, dtype=np.float64)
    rms = float(np.sqrt(np.mean(frame * frame)))
    if rms < config.silence_rms:
        return None, 0.0

    window = n // 2
    tau_max = min(window - 1, int(math.ceil(max_period)))
    tau_min = max(2, int(sample_rate / config.fmax))

    # d(tau) = sum_j (x_j - x_{j+tau})^2 over the half-frame window,
    # computed as power terms plus an FFT cross-correlation.
    sq = frame * frame
    cumulative = np.concatenate(([0.0], np.cumsum(sq)))
    power = cumulative[window:window + tau_max + 1] - cumulative[:tau_max + 1]
    size = 1
    while size < n + window:
        size <<= 1
    spectrum = np.fft.rfft(frame, size)
    head = np.fft.rfft(frame[:window], size)
    corr = np.fft.irfft(spectrum * np.conj(head), size)[: tau_max + 1]
    diff = power[0] + power - 2.0 * corr
    diff = np.maximum(diff, 0.0)

    # cumulative mean normalized difference
    cmnd = np.ones(tau_max + 1)
    running = np.cumsum(diff[1:])
    nonzero = running > 0
    taus = np.arange(1, tau_max + 1, dtype=np.float64)
    cmnd[1:][nonzero] = diff[1:][nonzero] * taus[nonzero] / running[nonzero]
    cmnd[1:][~nonzero] = 1.0

    search = cmnd[tau_min:tau_max + 1]
    below = np.flatnonzero(search < config.threshold)
    if len(below) == 0:
        best = float(np.min(search)) if len(search) else 1.0
        return None, max(0.0, 1.0 - best)
    tau = tau_min + int(below[0])
    while tau + 1 <= tau_max and cmnd[tau + 1] < cmnd[tau]:
        tau += 1

    # parabolic interpolation around the minimum
    shift = 0.0
    if 1 <= tau < tau_max:
        a, b, c = cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]
        denom = a - 2.0 * b + c
        if denom != 0:
            shift = max(-0.5, min(0.5, 0.5 * (a - c) / denom))
    f0 = sample_rate / (tau + shift)
    confidence = max(0.0, min(1.0, 1.0 - float(cmnd[tau])))
    return f0, confidence


def track_pitch(audio: AudioBuffer, config: CaptureConfig = CaptureConfig(),
                should_cancel: Callable[[], bool] | None = None) -> PitchTrack:
    """Sliding-window YIN with a width-5 median filter over f0 to remove
    single-frame octave glitches. Checks ``should_cancel`` once per frame."""
    samples = audio.samples
    frames = []
    raw: list[tuple[float, float | None, float, float]] = []
    start = 0
    while start + config.frame_size <= len(samples):
        if should_cancel is not None and should_cancel():
            raise CaptureCancelled("pitch tracking cancelled")
        chunk = samples[start:start + config.frame_size]
        f0, confidence = yin_frame(chunk, audio.sample_rate, config)
        rms = float(np.sqrt(np.mean(chunk * chunk)))
        time = (start + config.frame_size / 2) / audio.sample_rate
        raw.append((time, f0, confidence, rms))
        start += config.hop_size

    half = config.median_width // 2
    for i, (time, f0, confidence, rms) in enumerate(raw):
        if f0 is not None:
            neighborhood = [r[1] for r in raw[max(0, i - half):i + half + 1] if r[1] is not None]
            f0 = float(np.median(neighborhood))
        frames.append(PitchFrame(time, f0, confidence, rms))
    return PitchTrack(tuple(frames), config.hop_size / audio.sample_rate)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------

def _semitone_gap(f0: float, reference: float) -> float:
    return abs(12.0 * math.log2(f0 / reference))


def segment_notes(track: PitchTrack,
                  config: CaptureConfig = CaptureConfig()) -> list[RawNote]:
    """Contiguous voiced runs staying within half a semitone of the run
    median become notes; anything shorter than ``min_note_ms`` is dropped."""
    notes: list[RawNote] = []
    run: list[PitchFrame] = []

    def close_run():
        if not run:
            return
        start = run[0].time
        end = run[-1].time + track.hop_seconds
        if (end - start) * 1000.0 >= config.min_note_ms:
            median = float(np.median([f.f0 for f in run]))
            notes.append(RawNote(start, end, frequency_to_midi(median)))
        run.clear()

    for frame in track.frames:
        if not frame.voiced:
            close_run()
            continue
        if run:
            median = float(np.median([f.f0 for f in run]))
            if _semitone_gap(frame.f0, median) > 0.5:
                close_run()
        run.append(frame)
    close_run()

    if not notes:
        raise NoNotesDetected("no notes survived segmentation")
    return notes


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------

def _snap_beats(value: float) -> Fraction:
    """Nearest 1/12-beat grid point, ties rounding up."""
    return Fraction(math.floor(value * 12.0 + 0.5), 12)


def quantize_to_score(notes: list[RawNote], bpm: int) -> Score:
    """Snap onsets/ends to the 1/12-beat grid at ``bpm``; gaps become rests,
    measures split every 4 beats. Measure 1 starts at the first onset."""
    if not 20 <= bpm <= 300:
        raise ValueError(f"bpm {bpm} out of range 20-300")
    if not notes:
        raise NoNotesDetected("nothing to quantize")
    origin = notes[0].start
    beats_per_second = bpm / 60.0
    snapped: list[tuple[Fraction, Fraction, int]] = []
    for raw in sorted(notes, key=lambda n: n.start):
        onset = _snap_beats((raw.start - origin) * beats_per_second)
        end = _snap_beats((raw.end - origin) * beats_per_second)
        end = max(end, onset + MIN_QUANTIZED_BEATS)
        snapped.append((onset, end, raw.midi_number))
    cleaned: list[tuple[Fraction, Fraction, int]] = []
    for onset, end, midi in snapped:
        if cleaned and onset < cleaned[-1][1]:
            prev_onset, prev_end, prev_midi = cleaned[-1]
            if onset <= prev_onset:
                continue  # collapsed onto the same grid point: keep the first
            cleaned[-1] = (prev_onset, onset, prev_midi)
        cleaned.append((onset, end, midi))
    return notes_to_score(cleaned, bpm)


def capture_score(wav_bytes: bytes, bpm: int,
                  config: CaptureConfig = CaptureConfig(),
                  should_cancel: Callable[[], bool] | None = None) -> Score:
    """Full pipeline: WAV bytes to a quantized monophonic Score."""
    audio = decode_wav(wav_bytes)
    track = track_pitch(audio, config, should_cancel)
    return quantize_to_score(segment_notes(track, config), bpm)


def pitch_track_csv(track: PitchTrack) -> str:
    """Debug dump: one 'time,f0,confidence' row per frame."""
    lines = ["time,f0,confidence"]
    for frame in track.frames:
        f0 = f"{frame.f0:.3f}" if frame.voiced else ""
        lines.append(f"{frame.time:.6f},{f0},{frame.confidence:.4f}")
    return "\n".join(lines) + "\n"
