"""Progression/rhythm database: loading, validation, similarity search,
and rhythm fitting.

File grammar (line-oriented, ``#`` comments and blank lines ignored):

* progressions: ``id | category | mode | degree degree ...``
* rhythms:      ``id | style | (dur kind)(dur kind)...`` with rational
  durations like ``1/3`` and kind ``note`` or ``rest``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from difflib import SequenceMatcher
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import CountMismatch, DurationMismatch, ParseError
from .score import BEATS_PER_MEASURE, DegreeSymbol, Measure, Mode, parse_degree

SLOTS_PER_MEASURE = 48  # 1/12-beat raster
SLOT = Fraction(1, 12)

EXPECTED_CATEGORY_COUNTS = {
    "classic": 9,
    "extended": 9,
    "diminished": 4,
    "aug4": 4,
    "mixed": 5,
    "substitute": 4,
    "cycle": 4,
}
EXPECTED_RHYTHM_COUNT = 16


class Category(str, Enum):
    CLASSIC = "classic"
    EXTENDED = "extended"
    DIMINISHED = "diminished"
    AUG4 = "aug4"
    MIXED = "mixed"
    SUBSTITUTE = "substitute"
    CYCLE = "cycle"


_CATEGORY_ORDER = {c: i for i, c in enumerate(Category)}


@dataclass(frozen=True)
class ProgressionEntry:
    id: str
    category: Category
    degrees: tuple[DegreeSymbol, ...]
    mode: str  # "major" | "minor" | "both"

    def matches_mode(self, mode: Mode) -> bool:
        return self.mode == "both" or self.mode == mode.value

    @property
    def display(self) -> str:
        return " ".join(d.display for d in self.degrees)


@dataclass(frozen=True)
class RhythmPattern:
    id: int
    style_tag: str
    events: tuple[tuple[Fraction, str], ...]  # (duration, "note"|"rest")

    @property
    def total_beats(self) -> Fraction:
        return sum((d for d, _ in self.events), Fraction(0))

    @property
    def display(self) -> str:
        return "".join(f"({d} {k})" for d, k in self.events)


@dataclass(frozen=True)
class CorpusDb:
    progressions: tuple[ProgressionEntry, ...]
    rhythms: tuple[RhythmPattern, ...]
    source_digest: str

    def rhythm(self, pattern_id: int) -> RhythmPattern:
        for p in self.rhythms:
            if p.id == pattern_id:
                return p
        raise KeyError(f"no rhythm pattern {pattern_id}")

    def progression(self, entry_id: str) -> ProgressionEntry:
        for e in self.progressions:
            if e.id == entry_id:
                return e
        raise KeyError(f"no progression {entry_id}")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_progression_file(text: str) -> list[ProgressionEntry]:
    entries = []
    seen = set()
    for lineno, line in _content_lines(text):
        fields = [f.strip() for f in line.split("|")]
        if len(fields) != 4:
            raise ParseError("expected 'id | category | mode | degrees'", line=lineno)
        entry_id, category, mode, degrees_text = fields
        if entry_id in seen:
            raise ParseError(f"duplicate id {entry_id!r}", line=lineno)
        seen.add(entry_id)
        try:
            cat = Category(category)
        except ValueError:
            raise ParseError(f"unknown category {category!r}", line=lineno) from None
        if mode not in ("major", "minor", "both"):
            raise ParseError(f"unknown mode {mode!r}", line=lineno)
        tokens = degrees_text.split()
        if len(tokens) < 3:
            raise ParseError("progression needs at least 3 degrees", line=lineno)
        try:
            degrees = tuple(parse_degree(t) for t in tokens)
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from None
        entries.append(ProgressionEntry(entry_id, cat, degrees, mode))
    return entries


_RHYTHM_EVENT = re.compile(r"\(\s*(\d+(?:/\d+)?)\s+(note|rest)\s*\)")


def parse_rhythm_file(text: str) -> list[RhythmPattern]:
    patterns = []
    seen = set()
    for lineno, line in _content_lines(text):
        fields = [f.strip() for f in line.split("|")]
        if len(fields) != 3:
            raise ParseError("expected 'id | style | (dur kind)...'", line=lineno)
        id_text, style, events_text = fields
        try:
            pattern_id = int(id_text)
        except ValueError:
            raise ParseError(f"bad pattern id {id_text!r}", line=lineno) from None
        if pattern_id in seen:
            raise ParseError(f"duplicate id {pattern_id}", line=lineno)
        seen.add(pattern_id)
        consumed = re.sub(_RHYTHM_EVENT, "", events_text).strip()
        if consumed:
            raise ParseError(f"unparsed rhythm text {consumed!r}", line=lineno)
        events = tuple(
            (Fraction(dur), kind) for dur, kind in _RHYTHM_EVENT.findall(events_text)
        )
        if not events:
            raise ParseError("rhythm pattern has no events", line=lineno)
        pattern = RhythmPattern(pattern_id, style, events)
        if pattern.total_beats != BEATS_PER_MEASURE:
            raise DurationMismatch(
                f"pattern {pattern_id} sums to {pattern.total_beats} beats, expected 4"
            )
        patterns.append(pattern)
    return patterns


def _default_text(name: str) -> str:
    return resources.files("composeon").joinpath(f"data/{name}").read_text()


def load_corpus(progression_file: str | Path | None = None,
                rhythm_file: str | Path | None = None) -> CorpusDb:
    """Load and validate the database (shipped defaults when paths omitted)."""
    prog_text = (Path(progression_file).read_text() if progression_file
                 else _default_text("progressions.txt"))
    rhythm_text = (Path(rhythm_file).read_text() if rhythm_file
                   else _default_text("rhythms.txt"))
    progressions = parse_progression_file(prog_text)
    rhythms = parse_rhythm_file(rhythm_text)

    counts = {}
    for entry in progressions:
        counts[entry.category.value] = counts.get(entry.category.value, 0) + 1
    if counts != EXPECTED_CATEGORY_COUNTS:
        raise CountMismatch(
            f"progression category counts {counts} != {EXPECTED_CATEGORY_COUNTS}"
        )
    if len(rhythms) != EXPECTED_RHYTHM_COUNT:
        raise CountMismatch(f"{len(rhythms)} rhythm patterns, expected {EXPECTED_RHYTHM_COUNT}")
    ids = sorted(p.id for p in rhythms)
    if ids != list(range(1, EXPECTED_RHYTHM_COUNT + 1)):
        raise CountMismatch(f"rhythm ids {ids} are not 1..16")

    digest = hashlib.sha256(prog_text.encode() + rhythm_text.encode()).hexdigest()
    return CorpusDb(tuple(progressions), tuple(sorted(rhythms, key=lambda p: p.id)), digest)


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------

def similarity_ratio(a, b) -> Fraction:
    """Gestalt (Ratcliff/Obershelp) ratio 2M/T over degree tokens, exact.

    M is the total size of the recursive longest-matching-block
    decomposition with leftmost-longest tie-breaks; two empty sequences
    give 1 by convention.
    """
    a, b = list(a), list(b)
    total = len(a) + len(b)
    if total == 0:
        return Fraction(1)
    matcher = SequenceMatcher(None, a, b, autojunk=False)
    matched = sum(block.size for block in matcher.get_matching_blocks())
    return Fraction(2 * matched, total)


def rank_progressions(input_degrees, db: CorpusDb,
                      mode_filter: Mode) -> list[tuple[ProgressionEntry, Fraction]]:
    """All mode-matching entries scored against the input, best first.
    Ties break on category order (classic first), then id."""
    if not input_degrees:
        raise ValueError("input degrees must be non-empty")
    scored = [
        (entry, similarity_ratio(input_degrees, entry.degrees))
        for entry in db.progressions
        if entry.matches_mode(mode_filter)
    ]
    scored.sort(key=lambda er: (-er[1], _CATEGORY_ORDER[er[0].category], er[0].id))
    return scored


# ---------------------------------------------------------------------------
# Rhythm fitting
# ---------------------------------------------------------------------------

def _slot_index(beats: Fraction) -> int:
    scaled = beats * 12
    if scaled.denominator != 1:
        raise ValueError(f"position {beats} is off the 1/12-beat raster")
    return int(scaled)


def rasterize(events) -> tuple[str, ...]:
    """48-slot raster of a measure's worth of (onset, duration, is_note)
    triples; slots are 'o' (note onset), 's' (sustain), or 'r' (rest)."""
    slots = ["r"] * SLOTS_PER_MEASURE
    for onset, duration, is_note in events:
        start = _slot_index(onset)
        end = _slot_index(onset + duration)
        if is_note:
            slots[start] = "o"
            for i in range(start + 1, end):
                slots[i] = "s"
    return tuple(slots)


def rasterize_pattern(pattern: RhythmPattern) -> tuple[str, ...]:
    onset = Fraction(0)
    triples = []
    for duration, kind in pattern.events:
        triples.append((onset, duration, kind == "note"))
        onset += duration
    return rasterize(triples)


def rasterize_measure(measure: Measure) -> tuple[str, ...]:
    return rasterize([(e.onset, e.duration, e.is_note) for e in measure.events])


def fit_rhythm(measure: Measure, db: CorpusDb) -> tuple[RhythmPattern, int]:
    """Closest pattern by Hamming distance over the 48-slot raster; ties go
    to the lowest pattern id."""
    if not measure.events:
        raise ValueError("measure has no events")
    grid = rasterize_measure(measure)
    best = None
    best_distance = SLOTS_PER_MEASURE + 1
    for pattern in db.rhythms:  # stored sorted by id
        distance = sum(1 for a, b in zip(grid, rasterize_pattern(pattern)) if a != b)
        if distance < best_distance:
            best, best_distance = pattern, distance
    return best, best_distance
