"""Level-calibrated explanations of measures, phrases, and the piece, plus
the pluggable Music Theory Mentor client.

Explanation text is template-driven and filled only from the piece's
stored analysis, so the same piece always yields the same document. Jargon
is wrapped in ``[[term]]`` links; every linked term resolves in the
packaged glossary. Each section also carries a ``facts`` table listing the
musical claims embedded in its text, which the test harness checks against
the piece state.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources

import requests

from .corpus import CorpusDb
from .errors import MentorUnavailable, ScopeOutOfRange
from .generate import Phrase, Piece
from .score import Measure, Mode, OrnamentKind, Quality

TERM_PATTERN = re.compile(r"\[\[([a-z0-9 -]+)\]\]")

MENTOR_SYSTEM_PROMPT = (
    "You are the Music Theory Mentor inside a composition tool. Answer music "
    "theory questions clearly for a learner, in a short paragraph, relating "
    "concepts back to keys, scale degrees, and chord progressions. [v1]"
)


class ExplanationLevel(str, Enum):
    BEGINNER = "beginner"
    INTERMEDIATE = "intermediate"
    ADVANCED = "advanced"


class ScopeKind(str, Enum):
    MEASURE = "measure"
    PHRASE = "phrase"
    PIECE = "piece"


@dataclass(frozen=True)
class Scope:
    kind: ScopeKind
    index: int | None = None

    @classmethod
    def measure(cls, index: int) -> "Scope":
        return cls(ScopeKind.MEASURE, index)

    @classmethod
    def phrase(cls, index: int) -> "Scope":
        return cls(ScopeKind.PHRASE, index)

    @classmethod
    def piece(cls) -> "Scope":
        return cls(ScopeKind.PIECE)


@dataclass(frozen=True)
class Section:
    aspect: str  # chords | rhythm | embellishment
    text: str
    facts: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ExplanationDoc:
    scope: Scope
    level: ExplanationLevel
    sections: tuple[Section, ...]
    terms: tuple[str, ...]


def extract_terms(doc: ExplanationDoc) -> list[str]:
    """All glossary terms linked anywhere in the document, in order."""
    seen = []
    for section in doc.sections:
        for term in TERM_PATTERN.findall(section.text):
            if term not in seen:
                seen.append(term)
    return seen


def load_glossary() -> dict[str, str]:
    text = resources.files("composeon").joinpath("data/glossary.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, definition = line.partition("|")
        table[term.strip()] = definition.strip()
    return table


# ---------------------------------------------------------------------------
# Fact helpers
# ---------------------------------------------------------------------------

_DURATION_NAMES = {
    Fraction(4): "[[whole note]]",
    Fraction(2): "[[half note]]",
    Fraction(1): "[[quarter note]]",
    Fraction(1, 2): "[[eighth note]]",
    Fraction(1, 4): "[[sixteenth note]]",
    Fraction(1, 3): "[[triplet]] eighth",
    Fraction(2, 3): "[[triplet]] quarter",
    Fraction(3, 2): "dotted [[quarter note]]",
    Fraction(3, 4): "dotted [[eighth note]]",
}

_MAJORISH = (Quality.MAJOR, Quality.MAJOR7, Quality.DOMINANT7, Quality.AUGMENTED4)
_MINORISH = (Quality.MINOR, Quality.MINOR7)

_ORNAMENT_PLAIN = {
    OrnamentKind.APPOGGIATURA: "a leaning [[grace note]] (an [[appoggiatura]]) that briefly clashes and then settles onto its note",
    OrnamentKind.MORDENT: "a quick flick down to the neighbor note and back (a [[mordent]])",
    OrnamentKind.TRILL: "a rapid shake between the note and its upper neighbor (a [[trill]])",
}


def _duration_name(beats: Fraction) -> str:
    return _DURATION_NAMES.get(beats, f"{beats}-beat note")


def _chord_name(piece: Piece, chord) -> str:
    return chord.display_in(prefer_flats=piece.key.prefers_flats)


def _chord_tone_names(piece: Piece, chord) -> str:
    from .score import spell_pitch_class
    from .theory import chord_tones
    root = chord.root
    ordered = sorted(chord_tones(chord), key=lambda pc: (pc - root) % 12)
    return "-".join(spell_pitch_class(pc, piece.key.prefers_flats) for pc in ordered)


def _quality_comment(quality: Quality) -> str:
    if quality is Quality.DIMINISHED:
        return "It is a [[diminished]] chord, the tensest of the three-note colors."
    if quality in _MINORISH:
        return "It is a [[minor]]-type chord, with the darker of the two basic colors."
    return "It is a [[major]]-type chord, the brighter of the two basic colors."


def _function_sentence(degree_number: int) -> str:
    if degree_number == 1:
        return "It carries the [[tonic]] function - the music's home base."
    if degree_number in (5, 7):
        return "It carries the [[dominant]] function, building pull back toward the tonic."
    if degree_number in (2, 4):
        return "It carries the [[subdominant]] function, stepping away from home to prepare the dominant."
    if degree_number == 6:
        return "It stands in for the [[tonic]] as its relative [[minor]] neighbor."
    return "It adds mediant color between the main harmonic functions."


def _is_syncopated(measure: Measure) -> bool:
    for ev in measure.events:
        if ev.is_note and ev.onset % 1 != 0 and ev.end > (ev.onset // 1) + 1:
            return True
    return False


def _has_triplets(measure: Measure) -> bool:
    return any(ev.duration.denominator == 3 for ev in measure.events)


def _measure_ornaments(measure: Measure) -> list[OrnamentKind]:
    return [ev.ornament.kind for ev in measure.events if ev.is_note and ev.ornament]


def _degree_for_measure(piece: Piece, index: int):
    phrase = piece.phrase_for_measure(index)
    if phrase is not None:
        return phrase.progression[index - phrase.start_measure]
    measure = piece.right_hand().measures[index]
    if measure.chord is None:
        return None
    from .theory import chord_to_degree
    if index >= piece.input_measure_count:  # final cadence measure
        return chord_to_degree(measure.chord, piece.key)
    return chord_to_degree(measure.chord, piece.key)


# ---------------------------------------------------------------------------
# Section builders
# ---------------------------------------------------------------------------

def _measure_chords_section(piece: Piece, index: int, level: ExplanationLevel) -> Section:
    measure = piece.right_hand().measures[index]
    key_name = piece.key.name
    if measure.chord is None:
        return Section("chords", "This measure is all rests, so no [[chord]] is "
                                 "sounding; the harmony simply waits.", {})
    chord_name = _chord_name(piece, measure.chord)
    degree = _degree_for_measure(piece, index)
    tones = _chord_tone_names(piece, measure.chord)
    facts = {"chord": (chord_name,)}
    if level is ExplanationLevel.BEGINNER:
        text = (f"This measure is built on the {chord_name} [[chord]] - a group of "
                f"notes played together. Its notes are {tones}. "
                f"{_quality_comment(measure.chord.quality)}")
        facts["chord_tones"] = (tones,)
    elif level is ExplanationLevel.INTERMEDIATE:
        text = (f"The governing harmony is {chord_name}, the {degree.display} "
                f"[[scale degree]] of {key_name} in [[roman numeral]] terms. "
                f"{_function_sentence(degree.degree)}")
        facts["degree"] = (degree.display,)
        facts["key"] = (key_name,)
    else:
        phrase = piece.phrase_for_measure(index)
        substituted = bool(phrase and phrase.substituted[index - phrase.start_measure])
        if degree.degree in (5, 7):
            arc = ("a point of harmonic tension: its pull toward the [[tonic]] is "
                   "what gives the phrase its sense of [[tension and release]]")
        elif degree.degree == 1:
            arc = "a point of harmonic rest where the phrase's tension releases"
        else:
            arc = "a step in the phrase's journey between rest and tension"
        text = (f"{chord_name} ({degree.display} in {key_name}) is {arc}.")
        if substituted:
            text += (" This chord arrived by [[diatonic substitution]], trading the "
                     "original degree for a neighbor that shares two of its tones.")
        facts["degree"] = (degree.display,)
        facts["key"] = (key_name,)
    return Section("chords", text, facts)


def _measure_rhythm_section(piece: Piece, index: int, level: ExplanationLevel,
                            db: CorpusDb) -> Section:
    measure = piece.right_hand().measures[index]
    phrase = piece.phrase_for_measure(index)
    pattern_id = None
    if phrase is not None:
        pattern_id = phrase.rhythm_plan[index - phrase.start_measure]
    durations = []
    for ev in measure.events:
        if ev.is_note:
            name = _duration_name(ev.duration)
            if name not in durations:
                durations.append(name)
    facts: dict[str, tuple[str, ...]] = {}
    if level is ExplanationLevel.BEGINNER:
        if durations:
            text = (f"In 4/4 time each [[measure]] holds four [[beat]]s. This one uses "
                    f"{', '.join(durations)} values"
                    + (", with rests filling the silent beats." if any(not e.is_note for e in measure.events) else "."))
        else:
            text = "A silent [[measure]]: four [[beat]]s of rest."
    elif level is ExplanationLevel.INTERMEDIATE:
        if pattern_id is not None:
            style = db.rhythm(pattern_id).style_tag
            text = (f"This measure uses [[rhythm pattern]] {pattern_id} of the 16 "
                    f"predefined patterns - a {style} feel.")
            facts["pattern"] = (str(pattern_id),)
            facts["style"] = (style,)
            if index == phrase.start_measure:
                text += (" As the first measure of its [[phrase]], it reuses the "
                         "pattern matched to your input rhythm.")
        elif index < piece.input_measure_count:
            text = (f"Your input rhythm was matched to [[rhythm pattern]] "
                    f"{piece.fitted_rhythm_id} of the 16 predefined patterns; "
                    f"generated phrases lead with that pattern.")
            facts["pattern"] = (str(piece.fitted_rhythm_id),)
        else:
            text = ("The closing measure holds a single sustained [[whole note]] "
                    "rather than a worked rhythm pattern.")
    else:
        bits = []
        if _is_syncopated(measure):
            bits.append("notes land between the beats and hold across them - "
                        "[[syncopation]] that pushes against the pulse")
        if _has_triplets(measure):
            bits.append("[[triplet]] subdivisions roll three notes into the space of two")
        if not bits:
            bits.append("the onsets sit squarely on the grid, keeping the pulse plain")
        text = "Rhythmically, " + "; ".join(bits) + "."
        if pattern_id is not None:
            text += f" (Pattern {pattern_id}.)"
            facts["pattern"] = (str(pattern_id),)
    return Section("rhythm", text, facts)


def _measure_embellishment_section(piece: Piece, index: int,
                                   level: ExplanationLevel) -> Section:
    measure = piece.right_hand().measures[index]
    kinds = _measure_ornaments(measure)
    facts: dict[str, tuple[str, ...]] = {}
    if not kinds:
        text = ("No extra decorations in this measure - the melody states its "
                "notes plainly, without [[ornament]]s.")
        return Section("embellishment", text, facts)
    facts["ornament"] = tuple(k.value for k in kinds)
    if level is ExplanationLevel.BEGINNER:
        described = " and ".join(_ORNAMENT_PLAIN[k] for k in kinds)
        text = (f"Listen for {described} - extra notes that decorate the main "
                f"melody. Each one is named after its shape: {', '.join(k.value for k in kinds)}.")
    elif level is ExplanationLevel.INTERMEDIATE:
        text = (f"This measure carries {len(kinds)} [[ornament]]"
                f"{'s' if len(kinds) != 1 else ''} ({', '.join(k.value for k in kinds)}). "
                "Each auxiliary note was chosen to sit as close as possible to the "
                "current chord's tones, so the decoration reinforces the harmony.")
    else:
        text = (f"The {', '.join(k.value for k in kinds)} here adds a grain of local "
                "dissonance against the chord - small-scale [[tension and release]] "
                "that keeps the surface alive without disturbing the underlying line.")
    return Section("embellishment", text, facts)


def _phrase_chords_section(piece: Piece, phrase: Phrase,
                           level: ExplanationLevel) -> Section:
    progression = "-".join(d.display for d in phrase.progression)
    chord_names = [_chord_name(piece, c) for c in phrase.chords]
    key_name = piece.key.name
    n_subs = sum(phrase.substituted)
    if level is ExplanationLevel.BEGINNER:
        facts = {"chord": tuple(chord_names)}
        text = (f"This [[phrase]] walks through the [[chord]]s "
                f"{', '.join(chord_names)} - one per [[measure]]. Chords are groups "
                f"of notes played together; the left hand plays each as a solid "
                f"[[whole note]] block while the melody moves above it.")
    elif level is ExplanationLevel.INTERMEDIATE:
        facts = {"progression": (progression,), "key": (key_name,),
                 "chord": tuple(chord_names)}
        text = (f"The phrase follows the [[chord progression]] {progression} in "
                f"{key_name}, realized as {', '.join(chord_names)}. Progressions "
                f"like this move between [[tonic]], [[subdominant]], and "
                f"[[dominant]] functions to give the phrase direction.")
        if n_subs:
            text += (f" {n_subs} chord{'s were' if n_subs != 1 else ' was'} varied by "
                     "[[diatonic substitution]].")
    else:
        facts = {"progression": (progression,)}
        last_two = phrase.progression[-2:]
        if len(last_two) == 2 and last_two[0].degree == 5 and last_two[1].degree == 1:
            cadence = ("closes with an [[authentic cadence]]: the [[dominant]] "
                       "discharges onto the [[tonic]]")
        elif phrase.progression[-1].degree == 1:
            cadence = "settles back onto the [[tonic]] to close"
        else:
            cadence = "ends away from the [[tonic]], leaving the [[cadence]] open"
        text = (f"Structurally, {progression} shapes one arc of [[tension and "
                f"release]] and {cadence}. Hearing each phrase end in a similar "
                f"way is what marks the piece's sections for the listener.")
    return Section("chords", text, facts)


def _phrase_rhythm_section(piece: Piece, phrase: Phrase, level: ExplanationLevel,
                           db: CorpusDb) -> Section:
    ids = phrase.rhythm_plan
    styles = [db.rhythm(i).style_tag for i in ids]
    facts = {"pattern": tuple(str(i) for i in ids)}
    if level is ExplanationLevel.BEGINNER:
        text = (f"Each [[measure]] of the phrase follows a [[rhythm pattern]] - a "
                f"recipe of note and rest lengths filling four [[beat]]s. This "
                f"phrase uses patterns {', '.join(str(i) for i in ids)}.")
    elif level is ExplanationLevel.INTERMEDIATE:
        text = (f"The first measure keeps [[rhythm pattern]] {ids[0]}, the one "
                f"matched to your input, and the rest alternate between two "
                f"patterns drawn from the remaining pool of 16: "
                f"{', '.join(str(i) for i in ids)} ({', '.join(styles)} feels).")
        facts["style"] = tuple(styles)
    else:
        def pattern_syncopated(pid: int) -> bool:
            onset = Fraction(0)
            for dur, kind in db.rhythm(pid).events:
                if kind == "note" and onset % 1 != 0 and onset + dur > (onset // 1) + 1:
                    return True
                onset += dur
            return False

        sync = [str(pid) for pid in ids if pattern_syncopated(pid)]
        trip = [str(pid) for pid in ids
                if any(d.denominator == 3 for d, _ in db.rhythm(pid).events)]
        bits = []
        if trip:
            bits.append(f"patterns {', '.join(sorted(set(trip)))} bring [[triplet]] motion")
        if sync:
            bits.append(f"patterns {', '.join(sorted(set(sync)))} lean on off-[[beat]] rests for [[syncopation]]")
        if not bits:
            bits.append("the patterns keep an even, on-the-beat grid")
        text = (f"Across the phrase ({'-'.join(str(i) for i in ids)}), "
                + " and ".join(bits)
                + "; the alternation keeps the surface varied over a stable pulse.")
    return Section("rhythm", text, facts)


def _phrase_embellishment_section(piece: Piece, phrase: Phrase,
                                  level: ExplanationLevel) -> Section:
    kinds: list[OrnamentKind] = []
    for index in phrase.measure_range:
        kinds.extend(_measure_ornaments(piece.right_hand().measures[index]))
    if not kinds:
        return Section("embellishment",
                       "This phrase is left unornamented - the melody carries "
                       "itself without added [[ornament]]s.", {})
    names = [k.value for k in kinds]
    facts = {"ornament": tuple(names)}
    if level is ExplanationLevel.BEGINNER:
        text = (f"The phrase hides {len(kinds)} little decoration"
                f"{'s' if len(kinds) != 1 else ''} ({', '.join(names)}) - think of "
                f"them as [[grace note]]s: quick extra notes around the melody.")
    elif level is ExplanationLevel.INTERMEDIATE:
        text = (f"About one in twenty melody notes receives an [[ornament]]; here: "
                f"{', '.join(names)}. Auxiliaries are picked next to the chord "
                f"tones, so each decoration agrees with its harmony.")
    else:
        text = (f"The {', '.join(sorted(set(names)))} figures add passing dissonance "
                f"and release at the note level, echoing in miniature the phrase's "
                f"own harmonic [[tension and release]].")
    return Section("embellishment", text, facts)


def _piece_sections(piece: Piece, level: ExplanationLevel, db: CorpusDb) -> list[Section]:
    key_name = piece.key.name
    n_phrases = len(piece.phrases)
    input_degrees = "-".join(d.display for d in piece.input_degrees)
    chords_facts = {"key": (key_name,)}
    if input_degrees:
        chords_facts["progression"] = (input_degrees,)
    if level is ExplanationLevel.BEGINNER:
        chords_text = (f"The piece is in {key_name} - that [[key]] is its home. Your "
                       f"melody implied the [[chord]] degrees {input_degrees}, and each "
                       f"generated [[phrase]] extends that harmonic story.")
    elif level is ExplanationLevel.INTERMEDIATE:
        chords_text = (f"Analysis placed the input in {key_name}, implying the "
                       f"[[chord progression]] {input_degrees}. {n_phrases} generated "
                       f"phrase{'s' if n_phrases != 1 else ''} continue it, each a "
                       f"complete progression returning toward the [[tonic]].")
    else:
        chords_text = (f"The whole piece prolongs {key_name}: the input degrees "
                       f"{input_degrees} seed every recommendation, so each [[phrase]] "
                       f"restates the home [[key]] while varying its route through the "
                       f"[[dominant]] and [[subdominant]] regions. No modulation is "
                       f"attempted; coherence comes from [[diatonic]] unity.")
    rhythm_facts = {"pattern": (str(piece.fitted_rhythm_id),),
                    "bpm": (str(piece.score.bpm),)}
    rhythm_text = (f"At {piece.score.bpm} beats per minute ([[tempo]]), the input "
                   f"rhythm was matched to [[rhythm pattern]] "
                   f"{piece.fitted_rhythm_id} of 16; every phrase leads with it, "
                   f"keeping your rhythmic fingerprint audible throughout.")
    total = sum(len(_measure_ornaments(m)) for m in piece.right_hand().measures)
    if total:
        emb_text = (f"Across the piece, {total} melody note"
                    f"{'s' if total != 1 else ''} carry [[ornament]]s, decorating "
                    f"the line while leaving its shape intact.")
        emb_facts = {"ornament_total": (str(total),)}
    else:
        emb_text = ("No [[ornament]]s have been added yet - continue the piece "
                    "and roughly one in twenty melody notes will be decorated.")
        emb_facts = {}
    return [Section("chords", chords_text, chords_facts),
            Section("rhythm", rhythm_text, rhythm_facts),
            Section("embellishment", emb_text, emb_facts)]


def explain(piece: Piece, db: CorpusDb, scope: Scope,
            level: ExplanationLevel) -> ExplanationDoc:
    """Explanation document for a measure, phrase, or the whole piece; a
    deterministic function of the piece state."""
    if scope.kind is ScopeKind.MEASURE:
        if scope.index is None or not 0 <= scope.index < piece.score.measure_count:
            raise ScopeOutOfRange(f"measure {scope.index} does not exist")
        sections = [
            _measure_chords_section(piece, scope.index, level),
            _measure_rhythm_section(piece, scope.index, level, db),
            _measure_embellishment_section(piece, scope.index, level),
        ]
    elif scope.kind is ScopeKind.PHRASE:
        if scope.index is None or not 0 <= scope.index < len(piece.phrases):
            raise ScopeOutOfRange(f"phrase {scope.index} does not exist")
        phrase = piece.phrases[scope.index]
        sections = [
            _phrase_chords_section(piece, phrase, level),
            _phrase_rhythm_section(piece, phrase, level, db),
            _phrase_embellishment_section(piece, phrase, level),
        ]
    else:
        sections = _piece_sections(piece, level, db)
    doc = ExplanationDoc(scope, level, tuple(sections), ())
    return ExplanationDoc(scope, level, tuple(sections), tuple(extract_terms(doc)))


# ---------------------------------------------------------------------------
# Mentor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MentorConfig:
    endpoint_url: str | None = None
    api_key: str | None = None
    timeout: float = 10.0
    system_prompt: str = MENTOR_SYSTEM_PROMPT

    @classmethod
    def from_env(cls) -> "MentorConfig":
        return cls(endpoint_url=os.environ.get("COMPOSEON_MENTOR_URL") or None,
                   api_key=os.environ.get("COMPOSEON_MENTOR_KEY") or None)


@dataclass(frozen=True)
class MentorExchange:
    query: str
    response: str
    source: str  # "live" | "stub"


def load_canned_responses() -> dict[str, str]:
    text = resources.files("composeon").joinpath("data/mentor_canned.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, answer = line.partition("|")
        table[term.strip().lower()] = answer.strip()
    return table


def stub_answer(query: str) -> str:
    """Offline mentor: canned answer by term, then glossary definition, then
    a generic pointer. Always non-empty."""
    canned = load_canned_responses()
    glossary = load_glossary()
    normalized = query.strip().lower()
    if normalized in canned:
        return canned[normalized]
    if normalized in glossary:
        return glossary[normalized]
    hits = [term for term in sorted(set(canned) | set(glossary.keys()), key=len,
                                    reverse=True) if term in normalized]
    if hits:
        term = hits[0]
        body = canned.get(term) or glossary[term]
        return f"On \"{term}\": {body}"
    if re.search(r"\b[ivIV]+(dim|maj7|7)?\s*[-,]", query):
        return ("That looks like a chord progression in roman-numeral form. Read "
                "each numeral as a scale degree of the current key: I is the tonic "
                "(home), IV and ii prepare motion, and V pulls back to I. "
                "Progressions that travel home-away-tension-home are the backbone "
                "of tonal phrases.")
    return ("I don't have specific notes on that yet. Try asking about a linked "
            "term from an explanation - for example the circle of fifths, "
            "cadences, or diatonic substitution.")


def mentor_ask(query: str, config: MentorConfig | None = None) -> MentorExchange:
    """Forward the query to the configured chat endpoint, or answer from the
    packaged canned set when no endpoint is set."""
    if not query or not query.strip():
        raise ValueError("mentor query must be non-empty")
    config = config or MentorConfig.from_env()
    if not config.endpoint_url:
        return MentorExchange(query, stub_answer(query), "stub")
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    body = {"messages": [{"role": "system", "content": config.system_prompt},
                         {"role": "user", "content": query}]}
    try:
        reply = requests.post(config.endpoint_url, json=body, headers=headers,
                              timeout=config.timeout)
        reply.raise_for_status()
        content = reply.json().get("content", "")
    except Exception as exc:
        raise MentorUnavailable(f"mentor endpoint failed: {exc}") from exc
    if not content:
        raise MentorUnavailable("mentor endpoint returned an empty response")
    return MentorExchange(query, content, "live")
