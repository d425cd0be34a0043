"""Standard MIDI File reader/writer and Score conversion.

Tick math is exact integer arithmetic throughout: output files use 480
ticks per quarter note (divisible by 3 and 16, so triplets and sixteenths
land on integer ticks), and beat values convert via ``Fraction``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

from .errors import MalformedHeader, PolyphonicInput, TruncatedChunk, UnmatchedNoteOn
from .score import (
    BEATS_PER_MEASURE,
    EventKind,
    Hand,
    Measure,
    MeasureSource,
    NoteEvent,
    OrnamentKind,
    Part,
    Score,
    note,
    rest,
)

OUTPUT_DIVISION = 480
NOTE_VELOCITY = 80
IMPORT_GRID = Fraction(1, 12)


# ---------------------------------------------------------------------------
# Event model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoteOn:
    tick: int
    channel: int
    pitch: int
    velocity: int


@dataclass(frozen=True)
class NoteOff:
    tick: int
    channel: int
    pitch: int
    velocity: int


@dataclass(frozen=True)
class Tempo:
    tick: int
    microseconds_per_quarter: int


@dataclass(frozen=True)
class ProgramChange:
    tick: int
    channel: int
    program: int


@dataclass(frozen=True)
class EndOfTrack:
    tick: int


@dataclass(frozen=True)
class RawEvent:
    """Unknown meta/sysex/channel event kept losslessly (explicit status)."""

    tick: int
    data: bytes


TrackEvents = list
MICROSECONDS_PER_MINUTE = 60_000_000


@dataclass
class SmfDocument:
    format: int
    division: int
    tracks: list[TrackEvents]


def tempo_for_bpm(bpm: int) -> int:
    return round(MICROSECONDS_PER_MINUTE / bpm)


# ---------------------------------------------------------------------------
# Variable-length quantities
# ---------------------------------------------------------------------------

def encode_vlq(value: int) -> bytes:
    if value < 0:
        raise ValueError("VLQ values are non-negative")
    if value >> 28:
        raise ValueError("VLQ values are limited to 4 bytes")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def decode_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for i in range(4):
        if pos >= len(data):
            raise TruncatedChunk("VLQ runs past the end of the chunk")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MalformedHeader("VLQ longer than 4 bytes")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_DATA_BYTES = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}


def parse_smf(data: bytes) -> SmfDocument:
    """Decode note and tempo events; every other meta/sysex/channel event is
    retained as an opaque record. Running status is honored."""
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedHeader("file does not start with an MThd chunk")
    header_len = struct.unpack(">I", data[4:8])[0]
    if header_len < 6:
        raise MalformedHeader(f"MThd length {header_len} < 6")
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MalformedHeader(f"unsupported SMF format {fmt}")
    if division == 0 or division & 0x8000:
        raise MalformedHeader("division must be positive ticks per quarter")

    pos = 8 + header_len
    tracks = []
    while len(tracks) < ntracks:
        if pos + 8 > len(data):
            raise TruncatedChunk("expected another track chunk")
        chunk_type = data[pos:pos + 4]
        chunk_len = struct.unpack(">I", data[pos + 4:pos + 8])[0]
        chunk_end = pos + 8 + chunk_len
        if chunk_end > len(data):
            raise TruncatedChunk(f"chunk claims {chunk_len} bytes past end of file")
        if chunk_type == b"MTrk":
            tracks.append(_parse_track(data[pos + 8:chunk_end]))
        # unknown chunk types are skipped, as the SMF container format directs
        pos = chunk_end
    return SmfDocument(fmt, division, tracks)


def _parse_track(chunk: bytes) -> TrackEvents:
    events: TrackEvents = []
    pending: dict[tuple[int, int], list[int]] = {}
    tick = 0
    pos = 0
    running = None
    while pos < len(chunk):
        delta, pos = decode_vlq(chunk, pos)
        tick += delta
        if pos >= len(chunk):
            raise TruncatedChunk("event status missing")
        status = chunk[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running = status
        else:
            if running is None:
                raise MalformedHeader("data byte with no running status")
            status = running

        if status == 0xFF:
            if pos >= len(chunk):
                raise TruncatedChunk("meta type missing")
            meta_type = chunk[pos]
            length, data_pos = decode_vlq(chunk, pos + 1)
            data_end = data_pos + length
            if data_end > len(chunk):
                raise TruncatedChunk("meta event data truncated")
            payload = chunk[data_pos:data_end]
            pos = data_end
            if meta_type == 0x51 and length == 3:
                value = int.from_bytes(payload, "big")
                events.append(Tempo(tick, value))
            elif meta_type == 0x2F:
                events.append(EndOfTrack(tick))
            else:
                events.append(RawEvent(tick, bytes([0xFF, meta_type]) + encode_vlq(length) + payload))
        elif status in (0xF0, 0xF7):
            length, data_pos = decode_vlq(chunk, pos)
            data_end = data_pos + length
            if data_end > len(chunk):
                raise TruncatedChunk("sysex data truncated")
            events.append(RawEvent(tick, bytes([status]) + encode_vlq(length) + chunk[data_pos:data_end]))
            pos = data_end
        else:
            kind = status >> 4
            nbytes = _DATA_BYTES.get(kind)
            if nbytes is None:
                raise MalformedHeader(f"unexpected status byte {status:#x}")
            if pos + nbytes > len(chunk):
                raise TruncatedChunk("channel event data truncated")
            payload = chunk[pos:pos + nbytes]
            pos += nbytes
            channel = status & 0x0F
            if kind == 0x9 and payload[1] > 0:
                events.append(NoteOn(tick, channel, payload[0], payload[1]))
                pending.setdefault((channel, payload[0]), []).append(tick)
            elif kind == 0x8 or (kind == 0x9 and payload[1] == 0):
                events.append(NoteOff(tick, channel, payload[0], payload[1]))
                stack = pending.get((channel, payload[0]))
                if stack:
                    stack.pop()
            elif kind == 0xC:
                events.append(ProgramChange(tick, channel, payload[0]))
            else:
                events.append(RawEvent(tick, bytes([status]) + payload))
    for (channel, pitch), stack in pending.items():
        if stack:
            raise UnmatchedNoteOn(
                f"note-on pitch {pitch} on channel {channel} never released",
                tick=stack[0],
            )
    return events


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def _encode_event(event) -> bytes:
    if isinstance(event, NoteOn):
        return bytes([0x90 | event.channel, event.pitch, event.velocity])
    if isinstance(event, NoteOff):
        return bytes([0x80 | event.channel, event.pitch, event.velocity])
    if isinstance(event, Tempo):
        return bytes([0xFF, 0x51, 0x03]) + event.microseconds_per_quarter.to_bytes(3, "big")
    if isinstance(event, ProgramChange):
        return bytes([0xC0 | event.channel, event.program])
    if isinstance(event, EndOfTrack):
        return bytes([0xFF, 0x2F, 0x00])
    if isinstance(event, RawEvent):
        return event.data
    raise TypeError(f"unknown event {event!r}")


def write_smf(doc: SmfDocument) -> bytes:
    """Serialize with explicit status bytes and minimal-length VLQs; output
    is deterministic for a given document."""
    out = bytearray()
    out += b"MThd" + struct.pack(">IHHH", 6, doc.format, len(doc.tracks), doc.division)
    for track in doc.tracks:
        body = bytearray()
        tick = 0
        has_eot = track and isinstance(track[-1], EndOfTrack)
        events = track if has_eot else list(track) + [EndOfTrack(track[-1].tick if track else 0)]
        for event in events:
            if event.tick < tick:
                raise ValueError("track events must have non-decreasing ticks")
            body += encode_vlq(event.tick - tick)
            body += _encode_event(event)
            tick = event.tick
        out += b"MTrk" + struct.pack(">I", len(body)) + bytes(body)
    return bytes(out)


# ---------------------------------------------------------------------------
# Score -> SMF
# ---------------------------------------------------------------------------

def realize_ornament(event: NoteEvent) -> list[tuple[int, Fraction, Fraction]]:
    """Expand a tagged note into literal (midi, onset, duration) segments
    relative to the note's own onset; total duration is preserved."""
    main = event.pitch.midi_number
    d = event.duration
    if event.ornament is None:
        return [(main, Fraction(0), d)]
    aux = event.ornament.auxiliary.midi_number
    kind = event.ornament.kind
    if kind is OrnamentKind.APPOGGIATURA:
        half = d / 2
        return [(aux, Fraction(0), half), (main, half, d - half)]
    if kind is OrnamentKind.MORDENT:
        eighth = d / 8
        return [(main, Fraction(0), eighth), (aux, eighth, eighth),
                (main, eighth * 2, d - eighth * 2)]
    # trill: alternate in 1/4-beat slices starting on the main note; a
    # short remainder is absorbed into the final slice
    slices = []
    position = Fraction(0)
    remaining = d
    quarter = Fraction(1, 4)
    idx = 0
    while remaining > 0:
        take = quarter if remaining >= 2 * quarter or remaining == quarter else remaining
        slices.append((main if idx % 2 == 0 else aux, position, take))
        position += take
        remaining -= take
        idx += 1
    return slices


def _beats_to_tick(beats: Fraction) -> int:
    ticks = beats * OUTPUT_DIVISION
    if ticks.denominator != 1:
        raise ValueError(f"beat value {beats} is not exact at division {OUTPUT_DIVISION}")
    return int(ticks)


_SORT_RANK = {Tempo: 0, ProgramChange: 0, RawEvent: 0, NoteOff: 1, NoteOn: 2, EndOfTrack: 3}


def _part_track(part: Part) -> TrackEvents:
    events = [ProgramChange(0, 0, 0)]
    end_tick = 0
    for measure in part.measures:
        base = measure.index * BEATS_PER_MEASURE
        for ev in measure.events:
            if not ev.is_note:
                continue
            for midi, rel_onset, dur in realize_ornament(ev):
                start = _beats_to_tick(base + ev.onset + rel_onset)
                stop = _beats_to_tick(base + ev.onset + rel_onset + dur)
                events.append(NoteOn(start, 0, midi, NOTE_VELOCITY))
                events.append(NoteOff(stop, 0, midi, 0))
                end_tick = max(end_tick, stop)
    events.sort(key=lambda e: (e.tick, _SORT_RANK[type(e)],
                               getattr(e, "pitch", 0)))
    events.append(EndOfTrack(end_tick))
    return events


def score_to_smf(score: Score) -> SmfDocument:
    """Format-1 document: track 0 carries the tempo, then one track per
    part (right hand first). Ornament tags become literal note events."""
    tempo_track = [Tempo(0, tempo_for_bpm(score.bpm)), EndOfTrack(0)]
    tracks = [tempo_track]
    for role in (Hand.RIGHT, Hand.LEFT):
        part = score.part(role)
        if part is not None:
            tracks.append(_part_track(part))
    return SmfDocument(1, OUTPUT_DIVISION, tracks)


def export_midi_bytes(score: Score) -> bytes:
    return write_smf(score_to_smf(score))


# ---------------------------------------------------------------------------
# SMF -> Score
# ---------------------------------------------------------------------------

def _snap(beats: Fraction) -> Fraction:
    """Nearest 1/12-beat grid point, ties rounding up."""
    scaled = beats * 12
    snapped = (scaled.numerator * 2 + scaled.denominator) // (scaled.denominator * 2)
    return Fraction(snapped, 12)


def _paired_notes(doc: SmfDocument) -> list[tuple[int, int, int]]:
    """(start_tick, end_tick, pitch) for all tracks, sorted by start."""
    notes = []
    for track in doc.tracks:
        open_notes: dict[tuple[int, int], list[int]] = {}
        for event in track:
            if isinstance(event, NoteOn):
                open_notes.setdefault((event.channel, event.pitch), []).append(event.tick)
            elif isinstance(event, NoteOff):
                stack = open_notes.get((event.channel, event.pitch))
                if stack:
                    start = stack.pop(0)
                    notes.append((start, event.tick, event.pitch))
    notes.sort(key=lambda n: (n[0], n[1], n[2]))
    return notes


def smf_to_score(doc: SmfDocument) -> Score:
    """Monophonic import: ticks become rational beats, onsets and ends snap
    to the 1/12-beat grid, and measures split every 4 beats."""
    raw = _paired_notes(doc)
    for (s1, e1, p1), (s2, e2, p2) in zip(raw, raw[1:]):
        if s2 < e1:
            raise PolyphonicInput(
                f"notes {p1} and {p2} overlap at tick {s2}; melodies must be monophonic"
            )

    bpm = 120
    for track in doc.tracks:
        tempos = [e for e in track if isinstance(e, Tempo)]
        if tempos:
            bpm = max(20, min(300, round(MICROSECONDS_PER_MINUTE / tempos[0].microseconds_per_quarter)))
            break

    snapped: list[tuple[Fraction, Fraction, int]] = []
    for start, end, pitch in raw:
        onset = _snap(Fraction(start, doc.division))
        stop = max(_snap(Fraction(end, doc.division)), onset + IMPORT_GRID)
        snapped.append((onset, stop, pitch))
    # resolve collisions the snap may have introduced
    cleaned: list[tuple[Fraction, Fraction, int]] = []
    for onset, stop, pitch in snapped:
        if cleaned and onset < cleaned[-1][1]:
            prev_onset, prev_stop, prev_pitch = cleaned[-1]
            if onset <= prev_onset:
                continue  # same grid point: keep the earlier note
            cleaned[-1] = (prev_onset, onset, prev_pitch)
        cleaned.append((onset, stop, pitch))
    return notes_to_score(cleaned, bpm)


def notes_to_score(notes: list[tuple[Fraction, Fraction, int]], bpm: int) -> Score:
    """Grid-aligned (onset, end, midi) triples -> measures with explicit
    rests, split every 4 beats, final measure padded."""
    total_end = max((end for _, end, _ in notes), default=Fraction(0))
    measure_count = max(1, -(-total_end // BEATS_PER_MEASURE))
    measures = []
    for index in range(int(measure_count)):
        lo = index * BEATS_PER_MEASURE
        hi = lo + BEATS_PER_MEASURE
        events = []
        cursor = lo
        for onset, end, pitch in notes:
            if end <= lo or onset >= hi:
                continue
            seg_start , seg_end = max(onset, lo), min(end, hi)
            if seg_start > cursor:
                events.append(rest(cursor - lo, seg_start - cursor))
            events.append(note(seg_start - lo, seg_end - seg_start, pitch))
            cursor = seg_end
        if cursor < hi:
            events.append(rest(cursor - lo, hi - cursor))
        measures.append(Measure(index, events, source=MeasureSource.INPUT))
    return Score([Part(Hand.RIGHT, measures)], bpm=bpm)
