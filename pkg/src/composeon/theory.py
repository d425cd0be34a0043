"""Pure music-theory operations: scales, triads, key and chord detection,
degree arithmetic. Everything here is a pure function of its inputs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import AmbiguousKey, EmptyMelody, NonDiatonicChord
from .score import (
    ALL_KEYS,
    ChordSymbol,
    DegreeSymbol,
    Key,
    Mode,
    Quality,
    QUALITY_INTERVALS,
    Score,
)

MAJOR_STEPS = (0, 2, 4, 5, 7, 9, 11)
MINOR_STEPS = (0, 2, 3, 5, 7, 8, 10)  # natural minor

# Triad qualities per degree. Minor uses the harmonic-minor dominant
# (major V) and the leading-tone diminished triad on the raised 7th.
_MAJOR_TRIADS = (Quality.MAJOR, Quality.MINOR, Quality.MINOR, Quality.MAJOR,
                 Quality.MAJOR, Quality.MINOR, Quality.DIMINISHED)
_MINOR_TRIADS = (Quality.MINOR, Quality.DIMINISHED, Quality.MAJOR, Quality.MINOR,
                 Quality.MAJOR, Quality.MAJOR, Quality.DIMINISHED)

# Tie-break priority for chord detection, as degree numbers.
_DETECT_PRIORITY = (1, 5, 4, 6, 2, 3, 7)


def diatonic_scale(key: Key) -> tuple[int, ...]:
    """The 7 scale pitch classes, ascending from the tonic (natural minor
    for minor keys; see ``leading_tone`` for the raised 7th)."""
    steps = MAJOR_STEPS if key.mode is Mode.MAJOR else MINOR_STEPS
    return tuple((key.tonic + s) % 12 for s in steps)


def leading_tone(key: Key) -> int:
    """Pitch class a semitone below the tonic. For minor keys this is the
    harmonic-minor raised 7th, which sits outside ``diatonic_scale``."""
    return (key.tonic + 11) % 12


def allowed_pitch_classes(key: Key) -> frozenset[int]:
    """Scale pitch classes, plus the raised 7th in minor."""
    pcs = set(diatonic_scale(key))
    if key.mode is Mode.MINOR:
        pcs.add(leading_tone(key))
    return frozenset(pcs)


def diatonic_triads(key: Key) -> list[tuple[DegreeSymbol, ChordSymbol]]:
    """Stacked-third triads on each scale degree. In minor, degree 5 is the
    harmonic-minor major dominant and degree 7 the diminished triad on the
    raised leading tone."""
    scale = diatonic_scale(key)
    qualities = _MAJOR_TRIADS if key.mode is Mode.MAJOR else _MINOR_TRIADS
    out = []
    for i, quality in enumerate(qualities):
        root = scale[i]
        if key.mode is Mode.MINOR and i == 6:
            root = leading_tone(key)
        out.append((DegreeSymbol(i + 1, quality), ChordSymbol(root, quality)))
    return out


def chord_tones(chord: ChordSymbol) -> frozenset[int]:
    return frozenset((chord.root + iv) % 12 for iv in QUALITY_INTERVALS[chord.quality])


def triad_tones(chord: ChordSymbol) -> tuple[int, ...]:
    """Root, third, fifth (in stacking order) — the triad slice of any
    quality, used for the left-hand block voicing."""
    return tuple((chord.root + iv) % 12 for iv in QUALITY_INTERVALS[chord.quality][:3])


@dataclass(frozen=True)
class ScaleCandidate:
    key: Key
    score: Fraction  # duration-weighted in-scale coverage, in [0, 1]
    emphasis: int    # tonic-emphasis hits (first / last / longest note), 0-3


def _melody_notes(melody: Score):
    notes = []
    for part in melody.parts:
        for measure in part.measures:
            notes.extend(measure.sounded())
    return notes


def detect_scale(melody: Score, raise_on_tie: bool = False) -> list[ScaleCandidate]:
    """Rank all 24 keys by duration-weighted pitch-class coverage.

    Ties are broken by tonic emphasis (+0.1-grade bonus each for the tonic
    being the first note, the last note, and the longest note), then by
    canonical key order. Deterministic for identical input.
    """
    notes = _melody_notes(melody)
    if not notes:
        raise EmptyMelody("melody has no sounded notes")
    total = sum((n.duration for n in notes), Fraction(0))
    weight: dict[int, Fraction] = {}
    for n in notes:
        pc = n.pitch.pitch_class
        weight[pc] = weight.get(pc, Fraction(0)) + n.duration
    first_pc = notes[0].pitch.pitch_class
    last_pc = notes[-1].pitch.pitch_class
    longest_pc = max(notes, key=lambda n: n.duration).pitch.pitch_class

    candidates = []
    for key in ALL_KEYS:
        scale = set(diatonic_scale(key))
        covered = sum((w for pc, w in weight.items() if pc in scale), Fraction(0))
        emphasis = sum(1 for pc in (first_pc, last_pc, longest_pc) if pc == key.tonic)
        candidates.append(ScaleCandidate(key, covered / total, emphasis))
    candidates.sort(key=lambda c: (-c.score, -c.emphasis, c.key.canonical_index))
    if raise_on_tie and ranking_is_ambiguous(candidates):
        raise AmbiguousKey(
            f"keys {candidates[0].key.name} and {candidates[1].key.name} tie",
            ranking=candidates,
        )
    return candidates


def ranking_is_ambiguous(ranking: list[ScaleCandidate]) -> bool:
    if len(ranking) < 2:
        return False
    top, second = ranking[0], ranking[1]
    return top.score == second.score and top.emphasis == second.emphasis


def _detection_candidates(key: Key) -> list[ChordSymbol]:
    by_degree = {d.degree: c for d, c in diatonic_triads(key)}
    ordered = [by_degree[d] for d in _DETECT_PRIORITY]
    scale = diatonic_scale(key)
    ordered.append(ChordSymbol(scale[4], Quality.DOMINANT7))  # V7 after all triads
    return ordered


def detect_chords(melody: Score, key: Key) -> list[ChordSymbol | None]:
    """One governing chord per measure: the diatonic triad (or V7) covering
    the most duration-weighted pitch-class content; ties go to harmonic
    function priority I > V > IV > vi > ii > iii > vii (then V7)."""
    candidates = _detection_candidates(key)
    out: list[ChordSymbol | None] = []
    for measure in melody.parts[0].measures:
        notes = measure.sounded()
        if not notes:
            out.append(None)
            continue
        weight: dict[int, Fraction] = {}
        for n in notes:
            pc = n.pitch.pitch_class
            weight[pc] = weight.get(pc, Fraction(0)) + n.duration
        best = None
        best_cover = Fraction(-1)
        for chord in candidates:
            tones = chord_tones(chord)
            cover = sum((w for pc, w in weight.items() if pc in tones), Fraction(0))
            if cover > best_cover:
                best, best_cover = chord, cover
        out.append(best)
    return out


def chord_to_degree(chord: ChordSymbol, key: Key) -> DegreeSymbol:
    """Scale-degree form of an absolute chord. Roots on the flat-II slot
    get the 'b' alteration; in minor, roots on the raised 7th map to
    degree 7 (the leading-tone chord)."""
    scale = diatonic_scale(key)
    if chord.root in scale:
        return DegreeSymbol(scale.index(chord.root) + 1, chord.quality)
    if chord.root == (key.tonic + 1) % 12:
        return DegreeSymbol(2, chord.quality, flat=True)
    if key.mode is Mode.MINOR and chord.root == leading_tone(key):
        return DegreeSymbol(7, chord.quality)
    raise NonDiatonicChord(f"{chord.display} is not diatonic in {key.name}")


def degree_to_chord(degree: DegreeSymbol, key: Key) -> ChordSymbol:
    """Inverse of ``chord_to_degree``. In minor, degree-7 diminished chords
    sit on the raised leading tone; other degree-7 qualities use the
    natural subtonic."""
    scale = diatonic_scale(key)
    root = scale[degree.degree - 1]
    if degree.flat:
        root = (root - 1) % 12
    elif (key.mode is Mode.MINOR and degree.degree == 7
          and degree.quality is Quality.DIMINISHED):
        root = leading_tone(key)
    return ChordSymbol(root, degree.quality)
