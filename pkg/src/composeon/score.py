"""Symbolic score types: pitches, events, measures, keys, chord and degree symbols.

Time is exact: onsets and durations are ``fractions.Fraction`` quarter-note
beats. The meter is fixed at 4/4, so every measure spans exactly 4 beats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import ParseError

BEATS_PER_MEASURE = Fraction(4)

# Denominators representable in the engine: supports triplets (3, 6, 12)
# alongside binary subdivisions down to the 64th (16).
ALLOWED_DENOMINATORS = frozenset({1, 2, 3, 4, 6, 8, 12, 16})

SHARP_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
FLAT_NAMES = ("C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B")

# Major tonics whose signature is written with flats; everything else
# (0 or more sharps, ties going to sharps) uses sharp spelling.
_FLAT_SIDE_MAJOR_TONICS = frozenset({1, 3, 5, 8, 10})  # Db, Eb, F, Ab, Bb

_NOTE_TO_PC = {}
for _pc, _name in enumerate(SHARP_NAMES):
    _NOTE_TO_PC[_name] = _pc
for _pc, _name in enumerate(FLAT_NAMES):
    _NOTE_TO_PC.setdefault(_name, _pc)


class Mode(str, Enum):
    MAJOR = "major"
    MINOR = "minor"


class Quality(str, Enum):
    MAJOR = "major"
    MINOR = "minor"
    DIMINISHED = "diminished"
    AUGMENTED4 = "augmented4"
    MAJOR7 = "major7"
    MINOR7 = "minor7"
    DOMINANT7 = "dominant7"


# Stacked intervals from the chord root, in semitones.
QUALITY_INTERVALS = {
    Quality.MAJOR: (0, 4, 7),
    Quality.MINOR: (0, 3, 7),
    Quality.DIMINISHED: (0, 3, 6),
    Quality.AUGMENTED4: (0, 4, 6),
    Quality.MAJOR7: (0, 4, 7, 11),
    Quality.MINOR7: (0, 3, 7, 10),
    Quality.DOMINANT7: (0, 4, 7, 10),
}

TRIAD_QUALITIES = (Quality.MAJOR, Quality.MINOR, Quality.DIMINISHED, Quality.AUGMENTED4)
SEVENTH_QUALITIES = (Quality.MAJOR7, Quality.MINOR7, Quality.DOMINANT7)

_CHORD_SUFFIX = {
    Quality.MAJOR: "",
    Quality.MINOR: "m",
    Quality.DIMINISHED: "dim",
    Quality.AUGMENTED4: "aug4",
    Quality.MAJOR7: "maj7",
    Quality.MINOR7: "m7",
    Quality.DOMINANT7: "7",
}

_ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII")
_ROMAN_TO_DEGREE = {r: i + 1 for i, r in enumerate(_ROMAN)}


class EventKind(str, Enum):
    NOTE = "note"
    REST = "rest"


class OrnamentKind(str, Enum):
    APPOGGIATURA = "appoggiatura"
    MORDENT = "mordent"
    TRILL = "trill"


class MeasureSource(str, Enum):
    INPUT = "input"
    GENERATED = "generated"
    EDITED = "edited"


class Hand(str, Enum):
    RIGHT = "right_hand"
    LEFT = "left_hand"


def check_beats(value: Fraction, what: str) -> Fraction:
    value = Fraction(value)
    if value.denominator not in ALLOWED_DENOMINATORS:
        raise ValueError(f"{what} {value} has unsupported denominator {value.denominator}")
    return value


def spell_pitch_class(pc: int, prefer_flats: bool = False) -> str:
    names = FLAT_NAMES if prefer_flats else SHARP_NAMES
    return names[pc % 12]


def spell_pitch(midi_number: int, prefer_flats: bool = False) -> str:
    """Letter+accidental+octave, e.g. 66 -> 'F#4' (60 = C4)."""
    return spell_pitch_class(midi_number % 12, prefer_flats) + str(midi_number // 12 - 1)


def parse_note_name(name: str) -> int:
    """Note letter with optional accidental -> pitch class."""
    if name not in _NOTE_TO_PC:
        raise ParseError(f"unknown note name {name!r}")
    return _NOTE_TO_PC[name]


@dataclass(frozen=True)
class Pitch:
    """A concrete pitch; equality and hashing use the MIDI number only."""

    midi_number: int
    spelled_name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.midi_number <= 127:
            raise ValueError(f"midi number {self.midi_number} out of range")

    @property
    def pitch_class(self) -> int:
        return self.midi_number % 12

    def spelled(self, prefer_flats: bool = False) -> str:
        return self.spelled_name or spell_pitch(self.midi_number, prefer_flats)


@dataclass(frozen=True)
class Key:
    tonic: int
    mode: Mode

    def __post_init__(self):
        if not 0 <= self.tonic <= 11:
            raise ValueError(f"tonic {self.tonic} out of range")

    @property
    def prefers_flats(self) -> bool:
        rel_major = self.tonic if self.mode is Mode.MAJOR else (self.tonic + 3) % 12
        return rel_major in _FLAT_SIDE_MAJOR_TONICS

    @property
    def name(self) -> str:
        return f"{spell_pitch_class(self.tonic, self.prefers_flats)} {self.mode.value}"

    @property
    def canonical_index(self) -> int:
        """Position in the canonical ordering C major .. B major, C minor .. B minor."""
        return self.tonic + (0 if self.mode is Mode.MAJOR else 12)


ALL_KEYS = tuple(
    Key(tonic, mode) for mode in (Mode.MAJOR, Mode.MINOR) for tonic in range(12)
)


@dataclass(frozen=True)
class ChordSymbol:
    """Absolute chord: root pitch class plus quality."""

    root: int
    quality: Quality

    def __post_init__(self):
        if not 0 <= self.root <= 11:
            raise ValueError(f"chord root {self.root} out of range")

    @property
    def display(self) -> str:
        return self.display_in(prefer_flats=False)

    def display_in(self, prefer_flats: bool = False) -> str:
        return spell_pitch_class(self.root, prefer_flats) + _CHORD_SUFFIX[self.quality]

    @property
    def is_seventh(self) -> bool:
        return self.quality in SEVENTH_QUALITIES


@dataclass(frozen=True)
class DegreeSymbol:
    """Roman-numeral scale-degree form of a chord."""

    degree: int
    quality: Quality
    flat: bool = False

    def __post_init__(self):
        if not 1 <= self.degree <= 7:
            raise ValueError(f"degree {self.degree} out of range")
        if self.flat and self.degree != 2:
            raise ValueError("flat alteration is only defined for bII-type roots")

    @property
    def display(self) -> str:
        # The augmented-fourth chord on degree 4 is written with the bare
        # token "aug4", following the corpus notation.
        if self.degree == 4 and self.quality is Quality.AUGMENTED4 and not self.flat:
            return "aug4"
        roman = _ROMAN[self.degree - 1]
        if self.quality in (Quality.MINOR, Quality.MINOR7, Quality.DIMINISHED):
            roman = roman.lower()
        suffix = {
            Quality.MAJOR: "",
            Quality.MINOR: "",
            Quality.DIMINISHED: "dim",
            Quality.AUGMENTED4: "aug4",
            Quality.MAJOR7: "maj7",
            Quality.MINOR7: "7",
            Quality.DOMINANT7: "7",
        }[self.quality]
        return ("b" if self.flat else "") + roman + suffix


def parse_degree(text: str) -> DegreeSymbol:
    """Parse degree grammar: ["b"] roman ["dim"|"aug4"|"maj7"|"7"]."""
    raw = text.strip()
    if raw == "aug4":
        return DegreeSymbol(4, Quality.AUGMENTED4)
    body = raw
    flat = False
    if body.startswith("b"):
        flat = True
        body = body[1:]
    suffix = None
    for candidate in ("maj7", "aug4", "dim", "7"):
        if body.endswith(candidate):
            suffix = candidate
            body = body[: -len(candidate)]
            break
    if not body or body.upper() not in _ROMAN_TO_DEGREE:
        raise ParseError(f"bad degree token {text!r}")
    degree = _ROMAN_TO_DEGREE[body.upper()]
    if flat and degree != 2:
        raise ParseError(f"flat alteration only supported on degree 2: {text!r}")
    upper = body[0].isupper()
    if body not in (body.upper(), body.lower()):
        raise ParseError(f"mixed-case degree token {text!r}")
    if suffix == "dim":
        quality = Quality.DIMINISHED
    elif suffix == "aug4":
        quality = Quality.AUGMENTED4
    elif suffix == "maj7":
        quality = Quality.MAJOR7
    elif suffix == "7":
        quality = Quality.DOMINANT7 if upper else Quality.MINOR7
    else:
        quality = Quality.MAJOR if upper else Quality.MINOR
    return DegreeSymbol(degree, quality, flat)


def parse_chord(text: str) -> ChordSymbol:
    """Parse chord grammar: note-name ["m"|"dim"|"aug4"|"maj7"|"m7"|"7"]."""
    raw = text.strip()
    if not raw:
        raise ParseError("empty chord token")
    note = raw[0].upper()
    rest = raw[1:]
    if rest[:1] in ("#", "b"):
        note += rest[0]
        rest = rest[1:]
    root = parse_note_name(note)
    suffix_map = {
        "": Quality.MAJOR,
        "m": Quality.MINOR,
        "dim": Quality.DIMINISHED,
        "aug4": Quality.AUGMENTED4,
        "maj7": Quality.MAJOR7,
        "m7": Quality.MINOR7,
        "7": Quality.DOMINANT7,
    }
    if rest not in suffix_map:
        raise ParseError(f"bad chord token {text!r}")
    return ChordSymbol(root, suffix_map[rest])


@dataclass(frozen=True)
class OrnamentTag:
    kind: OrnamentKind
    auxiliary: Pitch


@dataclass(frozen=True)
class NoteEvent:
    kind: EventKind
    onset: Fraction
    duration: Fraction
    pitch: Pitch | None = None
    ornament: OrnamentTag | None = None

    def __post_init__(self):
        object.__setattr__(self, "onset", check_beats(self.onset, "onset"))
        object.__setattr__(self, "duration", check_beats(self.duration, "duration"))
        if self.onset < 0:
            raise ValueError("onset must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.onset + self.duration > BEATS_PER_MEASURE:
            raise ValueError("event extends past the end of the measure")
        if self.kind is EventKind.NOTE and self.pitch is None:
            raise ValueError("note events need a pitch")
        if self.kind is EventKind.REST and self.pitch is not None:
            raise ValueError("rest events must not carry a pitch")

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration

    @property
    def is_note(self) -> bool:
        return self.kind is EventKind.NOTE


def note(onset, duration, midi_number: int, ornament: OrnamentTag | None = None) -> NoteEvent:
    return NoteEvent(EventKind.NOTE, Fraction(onset), Fraction(duration),
                     Pitch(midi_number), ornament)


def rest(onset, duration) -> NoteEvent:
    return NoteEvent(EventKind.REST, Fraction(onset), Fraction(duration))


@dataclass
class Measure:
    index: int
    events: list[NoteEvent]
    chord: ChordSymbol | None = None
    source: MeasureSource = MeasureSource.INPUT

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: (e.onset, e.end))
        span = _covered_span(self.events)
        if span != BEATS_PER_MEASURE:
            raise ValueError(f"measure {self.index} covers {span} beats, expected 4")

    def sounded(self) -> list[NoteEvent]:
        return [e for e in self.events if e.is_note]

    @property
    def span(self) -> Fraction:
        return _covered_span(self.events)


def _covered_span(events: list[NoteEvent]) -> Fraction:
    """Length of the union of event intervals, which must start at beat 0
    and contain no gaps; co-onset events (block chords) are allowed."""
    if not events:
        return Fraction(0)
    covered = Fraction(0)
    for ev in sorted(events, key=lambda e: (e.onset, e.end)):
        if ev.onset > covered:
            raise ValueError(f"gap before onset {ev.onset}; rests must be explicit")
        covered = max(covered, ev.end)
    return covered


@dataclass
class Part:
    role: Hand
    measures: list[Measure]


@dataclass
class Score:
    parts: list[Part]
    bpm: int = 120
    key: Key | None = None

    def __post_init__(self):
        if not 20 <= self.bpm <= 300:
            raise ValueError(f"bpm {self.bpm} out of range 20-300")
        counts = {len(p.measures) for p in self.parts}
        if len(counts) > 1:
            raise ValueError("all parts must have the same measure count")

    @property
    def measure_count(self) -> int:
        return len(self.parts[0].measures) if self.parts else 0

    def part(self, role: Hand) -> Part | None:
        for p in self.parts:
            if p.role is role:
                return p
        return None
