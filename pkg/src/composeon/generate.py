"""Phrase generation: progression recommendation, diatonic substitution,
rhythm planning, two-hand realization, and ornamentation.

Randomness is drawn from one ``Rng`` stream in a fixed order so a seed
fully determines the output:

1. per interior chord (ascending): one Bernoulli draw, then one candidate
   choice when it fires and candidates exist;
2. rhythm planning: one ``sample`` of two pattern ids;
3. right hand: one direction draw per non-strong-beat onset, in time order;
4. ornaments: one ``sample`` of positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .corpus import CorpusDb, RhythmPattern, rank_progressions
from .errors import CorpusExhausted, IllegalState
from .rng import Rng, derive_seed
from .score import (
    BEATS_PER_MEASURE,
    ChordSymbol,
    DegreeSymbol,
    Hand,
    Key,
    Measure,
    MeasureSource,
    Mode,
    NoteEvent,
    OrnamentKind,
    OrnamentTag,
    Part,
    Pitch,
    Quality,
    Score,
    note,
    rest,
)
from .theory import (
    allowed_pitch_classes,
    chord_to_degree,
    chord_tones,
    degree_to_chord,
    diatonic_scale,
    diatonic_triads,
)


@dataclass(frozen=True)
class GenerationConfig:
    seed: int = 0
    substitution_probability: float = 0.2
    ornament_rate: float = 0.05  # 1 in 20 sounded notes
    right_hand_register: tuple[int, int] = (60, 84)
    left_hand_register: tuple[int, int] = (36, 59)

    def __post_init__(self):
        if not 0.0 <= self.substitution_probability <= 1.0:
            raise ValueError("substitution_probability must be in [0, 1]")
        if not 0.0 <= self.ornament_rate <= 1.0:
            raise ValueError("ornament_rate must be in [0, 1]")
        if self.left_hand_register[1] >= self.right_hand_register[0]:
            raise ValueError("hand registers must not overlap")


@dataclass
class Phrase:
    """One recommended progression realized as consecutive measures."""

    entry_id: str
    progression: list[DegreeSymbol]
    chords: list[ChordSymbol]
    substituted: list[bool]
    rhythm_plan: list[int]
    start_measure: int

    @property
    def length(self) -> int:
        return len(self.progression)

    @property
    def measure_range(self) -> range:
        return range(self.start_measure, self.start_measure + self.length)


# Common-tone substitution pairs, by degree (candidates in table order).
SUBSTITUTION_PAIRS = {1: (6, 3), 3: (1,), 6: (1,), 4: (2,), 2: (4,), 5: (7,), 7: (5,)}


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def substitution_candidates(degree: DegreeSymbol, key: Key) -> list[DegreeSymbol]:
    """Diatonic triads sharing at least two pitch classes with the chord,
    from the fixed pair table; first/flat/out-of-table degrees get none."""
    if degree.flat or degree.degree not in SUBSTITUTION_PAIRS:
        return []
    original = chord_tones(degree_to_chord(degree, key))
    triads = {d.degree: (d, c) for d, c in diatonic_triads(key)}
    out = []
    for paired in SUBSTITUTION_PAIRS[degree.degree]:
        cand_degree, cand_chord = triads[paired]
        if len(original & chord_tones(cand_chord)) >= 2:
            out.append(cand_degree)
    return out


def apply_substitution(progression: list[DegreeSymbol], key: Key, rng: Rng,
                       p: float) -> tuple[list[DegreeSymbol], list[bool]]:
    """With probability ``p`` per interior chord, swap in a common-tone
    diatonic triad. The first and last chords are never touched, so the
    cadence survives."""
    if len(progression) < 3:
        return list(progression), [False] * len(progression)
    result = list(progression)
    flags = [False] * len(progression)
    for i in range(1, len(progression) - 1):
        if not rng.bernoulli(p):
            continue
        candidates = substitution_candidates(progression[i], key)
        if not candidates:
            continue
        result[i] = rng.choice(candidates)
        flags[i] = True
    return result, flags


# ---------------------------------------------------------------------------
# Recommendation
# ---------------------------------------------------------------------------

def recommend_phrase(context_degrees: list[DegreeSymbol], key: Key, db: CorpusDb,
                     rng: Rng, click_index: int,
                     substitution_probability: float = 0.2,
                     used_ids: frozenset[str] = frozenset()) -> Phrase:
    """Descend the similarity ranking: click k takes the k-th distinct top
    candidate (entries already used are skipped, so no phrase repeats until
    the mode's pool is exhausted), then applies substitution and realizes
    the degrees into absolute chords."""
    if not context_degrees:
        raise ValueError("context degrees must be non-empty")
    ranked = rank_progressions(context_degrees, db, key.mode)
    if click_index > len(ranked):
        raise CorpusExhausted(f"click {click_index} exceeds the {len(ranked)}-entry pool")
    available = [entry for entry, _ in ranked if entry.id not in used_ids]
    if not available:
        raise CorpusExhausted("every matching progression has been used")
    entry = available[0]
    degrees, flags = apply_substitution(list(entry.degrees), key, rng,
                                        substitution_probability)
    chords = [degree_to_chord(d, key) for d in degrees]
    return Phrase(entry.id, degrees, chords, flags, rhythm_plan=[], start_measure=-1)


def plan_rhythms(fitted: RhythmPattern, db: CorpusDb, rng: Rng,
                 phrase_len: int) -> list[int]:
    """Measure 1 reuses the fitted pattern; the rest alternate between two
    patterns drawn without replacement from the remaining fifteen."""
    if phrase_len < 1:
        raise ValueError("phrase length must be at least 1")
    others = [p.id for p in db.rhythms if p.id != fitted.id]
    pair = rng.sample(others, 2)
    plan = [fitted.id]
    for i in range(1, phrase_len):
        plan.append(pair[(i - 1) % 2])
    return plan


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------

def _fold_into_register(pitch: int, register: tuple[int, int]) -> int:
    lo, hi = register
    while pitch < lo:
        pitch += 12
    while pitch > hi:
        pitch -= 12
    return pitch


def _nearest_pitch(target: int, pool: list[int]) -> int:
    """Closest pool pitch; ties resolve upward."""
    return min(pool, key=lambda p: (abs(p - target), -p))


def realize_left_hand(chords: list[ChordSymbol], key: Key,
                      register: tuple[int, int] = (36, 59),
                      start_index: int = 0) -> Part:
    """Whole-note root-position block triads, root voiced nearest above the
    register floor."""
    from .score import QUALITY_INTERVALS

    lo = register[0]
    measures = []
    for offset, chord in enumerate(chords):
        root = lo + (chord.root - lo) % 12
        events = [note(0, 4, root + iv) for iv in QUALITY_INTERVALS[chord.quality][:3]]
        measures.append(Measure(start_index + offset, events, chord=chord,
                                source=MeasureSource.GENERATED))
    return Part(Hand.LEFT, measures)


def _strong_beat(onset: Fraction) -> bool:
    return onset == 0 or onset == 2


def realize_measure_melody(chord: ChordSymbol, key: Key, pattern: RhythmPattern,
                           rng: Rng, previous_pitch: int,
                           register: tuple[int, int] = (60, 84)) -> tuple[list[NoteEvent], int]:
    """Melody for one measure: strong-beat onsets (beats 1 and 3) take the
    chord tone nearest the previous pitch; other onsets step one scale
    degree up or down (direction by rng). Returns (events, last pitch)."""
    lo, hi = register
    scale = diatonic_scale(key)
    scale_pitches = [p for p in range(lo, hi + 1) if p % 12 in scale]
    allowed = allowed_pitch_classes(key)
    strong_pcs = sorted(chord_tones(chord) & allowed) or sorted(chord_tones(chord))
    strong_pool = [p for p in range(lo, hi + 1) if p % 12 in strong_pcs]

    prev = _nearest_pitch(_fold_into_register(previous_pitch, register), scale_pitches)
    events: list[NoteEvent] = []
    onset = Fraction(0)
    for duration, kind in pattern.events:
        if kind == "rest":
            events.append(rest(onset, duration))
        else:
            if _strong_beat(onset):
                pitch = _nearest_pitch(prev, strong_pool)
            else:
                idx = scale_pitches.index(_nearest_pitch(prev, scale_pitches))
                step = 1 if rng.next_below(2) == 1 else -1
                j = idx + step
                if not 0 <= j < len(scale_pitches):
                    j = idx - step
                pitch = scale_pitches[j]
            events.append(note(onset, duration, pitch))
            prev = pitch
        onset += duration
    return events, prev


def realize_right_hand(chords: list[ChordSymbol], key: Key,
                       patterns: list[RhythmPattern], rng: Rng,
                       previous_pitch: int,
                       register: tuple[int, int] = (60, 84),
                       start_index: int = 0) -> Part:
    if len(patterns) != len(chords):
        raise ValueError("one rhythm pattern per chord required")
    measures = []
    prev = previous_pitch
    for offset, (chord, pattern) in enumerate(zip(chords, patterns)):
        events, prev = realize_measure_melody(chord, key, pattern, rng, prev, register)
        measures.append(Measure(start_index + offset, events, chord=chord,
                                source=MeasureSource.GENERATED))
    return Part(Hand.RIGHT, measures)


# ---------------------------------------------------------------------------
# Ornaments
# ---------------------------------------------------------------------------

def _scale_neighbor(pitch: int, key: Key, upward: bool) -> int:
    scale = diatonic_scale(key)
    step = 1 if upward else -1
    candidate = pitch + step
    while not 0 <= candidate <= 127 or candidate % 12 not in scale:
        candidate += step
        if not -12 <= candidate <= 139:
            raise ValueError("no scale neighbor in range")
    return candidate


def _pc_distance(a: int, b: int) -> int:
    d = abs(a - b) % 12
    return min(d, 12 - d)


def _ornament_choices(event: NoteEvent, chord: ChordSymbol, key: Key):
    """Feasible (kind, auxiliary) options for a note, in tie-break order
    appoggiatura > mordent > trill."""
    main = event.pitch.midi_number
    d = event.duration
    upper = _scale_neighbor(main, key, upward=True)
    lower = _scale_neighbor(main, key, upward=False)
    options = []
    if (d / 2).denominator in (1, 2, 3, 4, 6, 8, 12, 16):
        options.append((OrnamentKind.APPOGGIATURA, upper))
    if d.denominator in (1, 2):  # mordent needs d/8 on the grid
        options.append((OrnamentKind.MORDENT, lower))
    if d >= 1:
        options.append((OrnamentKind.TRILL, upper))
    return options


def add_ornaments(part: Part, chords: list[ChordSymbol], key: Key, rng: Rng,
                  rate: float) -> Part:
    """Tag round-half-up(rate x N) sounded notes, positions drawn uniformly
    without replacement; each gets the ornament whose auxiliary lies closest
    to the chord tones (ties: appoggiatura > mordent > trill)."""
    positions = [(mi, ei)
                 for mi, measure in enumerate(part.measures)
                 for ei, ev in enumerate(measure.events) if ev.is_note]
    count = round_half_up(rate * len(positions))
    if count == 0:
        return part
    chosen = sorted(rng.sample(range(len(positions)), count))
    for index in chosen:
        mi, ei = positions[index]
        measure = part.measures[mi]
        event = measure.events[ei]
        options = _ornament_choices(event, chords[mi], key)
        if not options:
            raise ValueError(f"no feasible ornament for duration {event.duration}")
        tones = chord_tones(chords[mi])
        kind, aux = min(
            options,
            key=lambda ka: (min(_pc_distance(ka[1] % 12, t) for t in tones),
                            list(OrnamentKind).index(ka[0])),
        )
        measure.events[ei] = replace(event, ornament=OrnamentTag(kind, Pitch(aux)))
    return part


# ---------------------------------------------------------------------------
# Piece assembly
# ---------------------------------------------------------------------------

@dataclass
class Piece:
    """The evolving two-hand composition plus everything generation needs."""

    score: Score
    key: Key
    input_measure_count: int
    input_degrees: list[DegreeSymbol]
    fitted_rhythm_id: int
    config: GenerationConfig
    rng: Rng
    phrases: list[Phrase] = field(default_factory=list)
    ended: bool = False
    final_measure: int | None = None

    @property
    def context_degrees(self) -> list[DegreeSymbol]:
        """Input degrees plus every recommended phrase so far; each new
        recommendation matches against this combined progression."""
        out = list(self.input_degrees)
        for phrase in self.phrases:
            out.extend(phrase.progression)
        return out

    @property
    def used_entry_ids(self) -> frozenset[str]:
        return frozenset(p.entry_id for p in self.phrases)

    def right_hand(self) -> Part:
        return self.score.part(Hand.RIGHT)

    def left_hand(self) -> Part | None:
        return self.score.part(Hand.LEFT)

    def last_melody_pitch(self, before_measure: int | None = None) -> int:
        limit = before_measure if before_measure is not None else len(self.right_hand().measures)
        for measure in reversed(self.right_hand().measures[:limit]):
            for event in reversed(measure.events):
                if event.is_note:
                    return event.pitch.midi_number
        return self.config.right_hand_register[0]

    def phrase_for_measure(self, measure_index: int) -> Phrase | None:
        for phrase in self.phrases:
            if measure_index in phrase.measure_range:
                return phrase
        return None


def start_piece(melody: Score, key: Key, measure_chords: list[ChordSymbol | None],
                fitted_rhythm_id: int, config: GenerationConfig) -> Piece:
    """Wrap an analyzed input melody as the piece under construction."""
    source = melody.parts[0]
    measures = [
        Measure(i, list(m.events), chord=measure_chords[i], source=MeasureSource.INPUT)
        for i, m in enumerate(source.measures)
    ]
    score = Score([Part(Hand.RIGHT, measures)], bpm=melody.bpm, key=key)
    degrees = [chord_to_degree(c, key) for c in measure_chords if c is not None]
    return Piece(score, key, len(measures), degrees, fitted_rhythm_id, config,
                 Rng(config.seed))


def _ensure_left_hand(piece: Piece) -> Part:
    lh = piece.left_hand()
    if lh is None:
        rests = [Measure(i, [rest(0, BEATS_PER_MEASURE)], source=MeasureSource.INPUT)
                 for i in range(piece.input_measure_count)]
        lh = Part(Hand.LEFT, rests)
        piece.score.parts.append(lh)
    return lh


def continue_piece(piece: Piece, db: CorpusDb) -> Phrase:
    """One 'Continue' click: recommend, plan, realize both hands, ornament,
    append, and grow the progression context."""
    if piece.ended:
        raise IllegalState("piece already ended")
    config = piece.config
    phrase = recommend_phrase(
        piece.context_degrees, piece.key, db, piece.rng,
        click_index=len(piece.phrases) + 1,
        substitution_probability=config.substitution_probability,
        used_ids=piece.used_entry_ids,
    )
    phrase.rhythm_plan = plan_rhythms(db.rhythm(piece.fitted_rhythm_id), db,
                                      piece.rng, phrase.length)
    start = piece.score.measure_count
    phrase.start_measure = start

    patterns = [db.rhythm(pid) for pid in phrase.rhythm_plan]
    rh = realize_right_hand(phrase.chords, piece.key, patterns, piece.rng,
                            piece.last_melody_pitch(),
                            register=config.right_hand_register,
                            start_index=start)
    rh = add_ornaments(rh, phrase.chords, piece.key, piece.rng, config.ornament_rate)
    lh = realize_left_hand(phrase.chords, piece.key,
                           register=config.left_hand_register, start_index=start)

    left = _ensure_left_hand(piece)
    piece.right_hand().measures.extend(rh.measures)
    left.measures.extend(lh.measures)
    piece.phrases.append(phrase)
    return phrase


def end_piece(piece: Piece) -> int:
    """Close with a whole-note tonic triad in both hands; returns the final
    measure index."""
    if piece.ended:
        raise IllegalState("piece already ended")
    tonic_quality = Quality.MAJOR if piece.key.mode is Mode.MAJOR else Quality.MINOR
    chord = degree_to_chord(DegreeSymbol(1, tonic_quality), piece.key)
    index = piece.score.measure_count

    register = piece.config.right_hand_register
    pool = [p for p in range(register[0], register[1] + 1) if p % 12 == piece.key.tonic]
    cadence_pitch = _nearest_pitch(
        _fold_into_register(piece.last_melody_pitch(), register), pool)
    rh_measure = Measure(index, [note(0, 4, cadence_pitch)], chord=chord,
                         source=MeasureSource.GENERATED)
    lh_measure = realize_left_hand([chord], piece.key,
                                   register=piece.config.left_hand_register,
                                   start_index=index).measures[0]
    left = _ensure_left_hand(piece)
    piece.right_hand().measures.append(rh_measure)
    left.measures.append(lh_measure)
    piece.ended = True
    piece.final_measure = index
    return index


# ---------------------------------------------------------------------------
# Measure edits
# ---------------------------------------------------------------------------

def re_realize_measure(piece: Piece, db: CorpusDb, measure_index: int,
                       degree: DegreeSymbol | None = None,
                       rhythm_id: int | None = None) -> None:
    """Swap a generated measure's chord degree or rhythm pattern and rebuild
    it; ornaments re-roll from a seed derived from (session seed, measure),
    so the same edit always lands the same way."""
    phrase = piece.phrase_for_measure(measure_index)
    if phrase is None:
        raise IllegalState(f"measure {measure_index} is not part of a generated phrase")
    slot = measure_index - phrase.start_measure
    if degree is not None:
        phrase.progression[slot] = degree
        phrase.chords[slot] = degree_to_chord(degree, piece.key)
        phrase.substituted[slot] = False
    if rhythm_id is not None:
        phrase.rhythm_plan[slot] = rhythm_id

    chord = phrase.chords[slot]
    pattern = db.rhythm(phrase.rhythm_plan[slot])
    edit_rng = Rng(derive_seed(piece.config.seed, measure_index))
    events, _ = realize_measure_melody(chord, piece.key, pattern, edit_rng,
                                       piece.last_melody_pitch(measure_index),
                                       register=piece.config.right_hand_register)
    rh_measure = Measure(measure_index, events, chord=chord, source=MeasureSource.EDITED)
    rh_part = Part(Hand.RIGHT, [rh_measure])
    add_ornaments(rh_part, [chord], piece.key, edit_rng, piece.config.ornament_rate)
    piece.right_hand().measures[measure_index] = rh_part.measures[0]

    lh_measure = realize_left_hand([chord], piece.key,
                                   register=piece.config.left_hand_register,
                                   start_index=measure_index).measures[0]
    lh_measure.source = MeasureSource.EDITED
    piece.left_hand().measures[measure_index] = lh_measure
