"""Engine sessions: the interactive loop's state machine, analysis, score
documents, edits, and disk persistence.

The CLI and the HTTP service both drive this module, so a given (input,
seed, corpus) trail produces byte-identical exports on either path. A
session's full history is captured as an action list; replaying it on load
reproduces the exact same piece.
"""

from __future__ import annotations

import base64
import json
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .capture import capture_score
from .corpus import CorpusDb, fit_rhythm
from .errors import (
    ForbiddenEdit,
    IllegalState,
    InvalidEdit,
    SchemaVersionMismatch,
    UnsupportedMediaType,
)
from .explain import ExplanationDoc, ExplanationLevel, Scope, explain
from .generate import (
    GenerationConfig,
    Piece,
    continue_piece,
    end_piece,
    re_realize_measure,
    start_piece,
)
from .midi import export_midi_bytes, parse_smf, smf_to_score
from .score import DegreeSymbol, Quality, parse_degree
from .theory import (
    chord_to_degree,
    detect_chords,
    detect_scale,
    diatonic_triads,
    ranking_is_ambiguous,
)

SCHEMA_VERSION = 1


class SessionState(str, Enum):
    EMPTY = "empty"
    UPLOADED = "uploaded"
    ANALYZED = "analyzed"
    EXTENDED = "extended"
    ENDED = "ended"


@dataclass
class Analysis:
    key_name: str
    ambiguous: bool
    key_ranking: list[tuple[str, float]]  # top candidates (name, score)
    measure_chords: list[str | None]
    degrees: list[str]
    fitted_rhythm_id: int
    fitted_distance: int


@dataclass
class EditRecord:
    measure: int
    field: str  # "degree" | "rhythm"
    old: str
    new: str
    timestamp: float


def _looks_like_mp3(data: bytes) -> bool:
    return data[:3] == b"ID3" or (len(data) > 1 and data[0] == 0xFF and (data[1] & 0xE0) == 0xE0)


@dataclass
class Session:
    db: CorpusDb
    config: GenerationConfig = field(default_factory=GenerationConfig)
    id: str = field(default_factory=lambda: uuid.uuid4().hex)
    state: SessionState = SessionState.EMPTY
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    input_kind: str | None = None  # "wav" | "mid"
    input_bytes: bytes | None = None
    bpm: int = 120
    analysis: Analysis | None = None
    piece: Piece | None = None
    edit_log: list[EditRecord] = field(default_factory=list)
    actions: list[dict] = field(default_factory=list)

    # -- state machine ------------------------------------------------------

    def _require(self, *states: SessionState):
        if self.state not in states:
            raise IllegalState(
                f"operation not allowed in state {self.state.value!r}"
            )

    def _touch(self):
        self.updated = time.time()

    # -- upload & analysis --------------------------------------------------

    def upload_audio(self, data: bytes) -> None:
        self._require(SessionState.EMPTY)
        if _looks_like_mp3(data):
            raise UnsupportedMediaType(
                "mp3 uploads are not supported; please provide .wav or .mid"
            )
        self.input_kind = "wav"
        self.input_bytes = data
        self.state = SessionState.UPLOADED
        self._touch()

    def upload_midi(self, data: bytes) -> None:
        self._require(SessionState.EMPTY)
        if _looks_like_mp3(data):
            raise UnsupportedMediaType(
                "mp3 uploads are not supported; please provide .wav or .mid"
            )
        self.input_kind = "mid"
        self.input_bytes = data
        self.state = SessionState.UPLOADED
        self._touch()

    def process(self, bpm: int | None = None) -> Analysis:
        """Capture/parse the upload, then run the full analysis chain:
        key detection, per-measure chords, degrees, rhythm fit."""
        self._require(SessionState.UPLOADED)
        if bpm is not None and not 20 <= bpm <= 300:
            raise ValueError(f"bpm {bpm} out of range 20-300")
        if self.input_kind == "wav":
            melody = capture_score(self.input_bytes, bpm or 120)
        else:
            melody = smf_to_score(parse_smf(self.input_bytes))
            if bpm is not None:
                melody.bpm = bpm
        self.bpm = melody.bpm

        ranking = detect_scale(melody)
        ambiguous = ranking_is_ambiguous(ranking)
        key = ranking[0].key
        chords = detect_chords(melody, key)
        fitted, distance = fit_rhythm(melody.parts[0].measures[0], self.db)
        self.piece = start_piece(melody, key, chords, fitted.id, self.config)
        self.analysis = Analysis(
            key_name=key.name,
            ambiguous=ambiguous,
            key_ranking=[(c.key.name, float(c.score)) for c in ranking[:5]],
            measure_chords=[c.display_in(key.prefers_flats) if c else None for c in chords],
            degrees=[d.display for d in self.piece.input_degrees],
            fitted_rhythm_id=fitted.id,
            fitted_distance=distance,
        )
        self.state = SessionState.ANALYZED
        self._touch()
        return self.analysis

    # -- generation ---------------------------------------------------------

    def continue_phrase(self, record: bool = True) -> dict:
        self._require(SessionState.ANALYZED, SessionState.EXTENDED)
        phrase = continue_piece(self.piece, self.db)
        self.state = SessionState.EXTENDED
        if record:
            self.actions.append({"op": "continue"})
        self._touch()
        return self._phrase_doc(len(self.piece.phrases) - 1)

    def end(self, record: bool = True) -> dict:
        self._require(SessionState.ANALYZED, SessionState.EXTENDED)
        final = end_piece(self.piece)
        self.state = SessionState.ENDED
        if record:
            self.actions.append({"op": "end"})
        self._touch()
        return {"final_measure": final, "chord": self._measure_chord_display(final)}

    # -- reads ----------------------------------------------------------------

    def _require_analyzed(self):
        self._require(SessionState.ANALYZED, SessionState.EXTENDED, SessionState.ENDED)

    def export(self) -> bytes:
        self._require_analyzed()
        return export_midi_bytes(self.piece.score)

    def _measure_chord_display(self, index: int) -> str | None:
        chord = self.piece.right_hand().measures[index].chord
        return chord.display_in(self.piece.key.prefers_flats) if chord else None

    def _measure_degree_display(self, index: int) -> str | None:
        phrase = self.piece.phrase_for_measure(index)
        if phrase is not None:
            return phrase.progression[index - phrase.start_measure].display
        chord = self.piece.right_hand().measures[index].chord
        if chord is None:
            return None
        return chord_to_degree(chord, self.piece.key).display

    def _phrase_doc(self, index: int) -> dict:
        phrase = self.piece.phrases[index]
        flats = self.piece.key.prefers_flats
        return {
            "index": index,
            "entry_id": phrase.entry_id,
            "start_measure": phrase.start_measure,
            "length": phrase.length,
            "progression": [d.display for d in phrase.progression],
            "chords": [c.display_in(flats) for c in phrase.chords],
            "rhythm_plan": list(phrase.rhythm_plan),
            "substituted": list(phrase.substituted),
        }

    def score_document(self) -> dict:
        """Everything the UI needs to render and steer the piece."""
        self._require_analyzed()
        piece = self.piece
        flats = piece.key.prefers_flats
        parts = []
        for part in piece.score.parts:
            measures = []
            for m in part.measures:
                events = []
                for ev in m.events:
                    entry = {
                        "kind": ev.kind.value,
                        "onset": str(ev.onset),
                        "duration": str(ev.duration),
                    }
                    if ev.is_note:
                        entry["midi"] = ev.pitch.midi_number
                        entry["name"] = ev.pitch.spelled(flats)
                        if ev.ornament:
                            entry["ornament"] = {
                                "kind": ev.ornament.kind.value,
                                "auxiliary": ev.ornament.auxiliary.midi_number,
                            }
                    events.append(entry)
                measures.append({
                    "index": m.index,
                    "source": m.source.value,
                    "chord": m.chord.display_in(flats) if m.chord else None,
                    "degree": self._measure_degree_display(m.index) if m.chord else None,
                    "events": events,
                })
            parts.append({"role": part.role.value, "measures": measures})
        return {
            "state": self.state.value,
            "bpm": piece.score.bpm,
            "key": {
                "tonic": piece.key.tonic,
                "mode": piece.key.mode.value,
                "name": piece.key.name,
            },
            "input_measures": piece.input_measure_count,
            "measure_count": piece.score.measure_count,
            "parts": parts,
            "phrases": [self._phrase_doc(i) for i in range(len(piece.phrases))],
            "final_measure": piece.final_measure,
        }

    def explanation(self, scope_kind: str, index: int | None,
                    level: str) -> ExplanationDoc:
        self._require_analyzed()
        if scope_kind == "measure":
            scope = Scope.measure(index if index is not None else -1)
        elif scope_kind == "phrase":
            scope = Scope.phrase(index if index is not None else -1)
        elif scope_kind == "piece":
            scope = Scope.piece()
        else:
            raise InvalidEdit(f"unknown scope {scope_kind!r}")
        return explain(self.piece, self.db, scope, ExplanationLevel(level))

    # -- edits ----------------------------------------------------------------

    def alternatives(self, measure: int) -> dict:
        """Offered degree and rhythm choices for a generated measure: the 7
        diatonic degrees plus V7, and all 16 rhythm pattern ids."""
        self._require(SessionState.EXTENDED, SessionState.ENDED)
        self._check_editable_measure(measure)
        degrees = [d.display for d, _ in diatonic_triads(self.piece.key)]
        degrees.append(DegreeSymbol(5, Quality.DOMINANT7).display)
        return {
            "measure": measure,
            "degrees": degrees,
            "rhythms": [p.id for p in self.db.rhythms],
        }

    def _check_editable_measure(self, measure: int):
        if not 0 <= measure < self.piece.score.measure_count:
            raise InvalidEdit(f"measure {measure} does not exist")
        if measure < self.piece.input_measure_count:
            raise ForbiddenEdit(f"measure {measure} is part of the input melody")
        if self.piece.phrase_for_measure(measure) is None:
            raise ForbiddenEdit(f"measure {measure} is the closing cadence")

    def edit_measure(self, measure: int, field_name: str, value,
                     record: bool = True, timestamp: float | None = None) -> dict:
        self._require(SessionState.EXTENDED)
        self._check_editable_measure(measure)
        offered = self.alternatives(measure)
        if field_name == "degree":
            if value not in offered["degrees"]:
                raise InvalidEdit(f"degree {value!r} is not among the offered alternatives")
            old = self._measure_degree_display(measure)
            re_realize_measure(self.piece, self.db, measure, degree=parse_degree(value))
        elif field_name == "rhythm":
            try:
                rhythm_id = int(value)
            except (TypeError, ValueError):
                raise InvalidEdit(f"rhythm id {value!r} is not an integer") from None
            if rhythm_id not in offered["rhythms"]:
                raise InvalidEdit(f"rhythm {rhythm_id} is not among the offered alternatives")
            phrase = self.piece.phrase_for_measure(measure)
            old = str(phrase.rhythm_plan[measure - phrase.start_measure])
            re_realize_measure(self.piece, self.db, measure, rhythm_id=rhythm_id)
        else:
            raise InvalidEdit(f"unknown edit field {field_name!r}")
        entry = EditRecord(measure, field_name, old, str(value),
                           timestamp if timestamp is not None else time.time())
        self.edit_log.append(entry)
        if record:
            self.actions.append({"op": "edit", "measure": measure,
                                 "field": field_name, "value": str(value),
                                 "ts": entry.timestamp})
        self._touch()
        return self._measure_doc(measure)

    def _measure_doc(self, index: int) -> dict:
        doc = self.score_document()
        return {
            "measure": index,
            "right_hand": doc["parts"][0]["measures"][index],
            "left_hand": doc["parts"][1]["measures"][index] if len(doc["parts"]) > 1 else None,
        }

    def summary(self) -> dict:
        return {
            "id": self.id,
            "state": self.state.value,
            "bpm": self.bpm,
            "created": self.created,
            "updated": self.updated,
            "config": {
                "seed": self.config.seed,
                "substitution_probability": self.config.substitution_probability,
                "ornament_rate": self.config.ornament_rate,
            },
            "measure_count": self.piece.score.measure_count if self.piece else 0,
            "phrase_count": len(self.piece.phrases) if self.piece else 0,
            "analysis": None if self.analysis is None else {
                "key": self.analysis.key_name,
                "ambiguous": self.analysis.ambiguous,
                "key_ranking": [list(pair) for pair in self.analysis.key_ranking],
                "measure_chords": self.analysis.measure_chords,
                "degrees": self.analysis.degrees,
                "fitted_rhythm_id": self.analysis.fitted_rhythm_id,
                "fitted_distance": self.analysis.fitted_distance,
            },
            "edits": len(self.edit_log),
        }

    # -- persistence ----------------------------------------------------------

    def to_json(self) -> dict:
        self._require(SessionState.UPLOADED, SessionState.ANALYZED,
                      SessionState.EXTENDED, SessionState.ENDED)
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "created": self.created,
            "updated": self.updated,
            "corpus_digest": self.db.source_digest,
            "config": {
                "seed": self.config.seed,
                "substitution_probability": self.config.substitution_probability,
                "ornament_rate": self.config.ornament_rate,
            },
            "bpm": self.bpm,
            "processed": self.state != SessionState.UPLOADED,
            "input_kind": self.input_kind,
            "input_b64": base64.b64encode(self.input_bytes).decode("ascii"),
            "actions": list(self.actions),
        }

    def save(self, data_dir: str | Path) -> Path:
        path = Path(data_dir) / f"{self.id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2))
        return path

    @classmethod
    def from_json(cls, payload: dict, db: CorpusDb) -> "Session":
        """Rebuild a session by replaying its recorded actions; the seeded
        rng makes the result byte-identical to the saved original."""
        version = payload.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(f"schema version {version!r}, expected {SCHEMA_VERSION}")
        if payload.get("corpus_digest") not in (None, db.source_digest):
            raise SchemaVersionMismatch("session was saved against a different corpus")
        config = GenerationConfig(
            seed=payload["config"]["seed"],
            substitution_probability=payload["config"]["substitution_probability"],
            ornament_rate=payload["config"]["ornament_rate"],
        )
        session = cls(db=db, config=config, id=payload["id"])
        session.created = payload.get("created", session.created)
        data = base64.b64decode(payload["input_b64"])
        if payload["input_kind"] == "wav":
            session.upload_audio(data)
        else:
            session.upload_midi(data)
        if payload.get("processed", True):
            session.process(payload.get("bpm"))
            for action in payload.get("actions", []):
                if action["op"] == "continue":
                    session.continue_phrase(record=False)
                elif action["op"] == "end":
                    session.end(record=False)
                elif action["op"] == "edit":
                    session.edit_measure(action["measure"], action["field"],
                                         action["value"], record=False,
                                         timestamp=action.get("ts"))
                else:
                    raise SchemaVersionMismatch(f"unknown action {action['op']!r}")
        session.actions = list(payload.get("actions", []))
        session.updated = payload.get("updated", session.updated)
        return session

    @classmethod
    def load(cls, data_dir: str | Path, session_id: str, db: CorpusDb) -> "Session":
        path = Path(data_dir) / f"{session_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"no saved session {session_id}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaVersionMismatch(f"session file is corrupted: {exc}") from exc
        return cls.from_json(payload, db)
