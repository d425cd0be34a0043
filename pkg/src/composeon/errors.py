"""Exception types shared across the engine."""


class ComposeOnError(Exception):
    """Base class for all engine errors."""


class EmptyMelody(ComposeOnError):
    """Input contains no sounded notes."""


class AmbiguousKey(ComposeOnError):
    """Two keys tie for first place even after tie-breaks."""

    def __init__(self, message, ranking=None):
        super().__init__(message)
        self.ranking = ranking or []


class NonDiatonicChord(ComposeOnError):
    """Chord root fits neither the scale nor the flat-II slot."""


class MalformedHeader(ComposeOnError):
    """MIDI file does not start with a valid MThd header."""


class TruncatedChunk(ComposeOnError):
    """MIDI chunk claims more bytes than the file contains."""


class UnmatchedNoteOn(ComposeOnError):
    """A note-on never received its note-off."""

    def __init__(self, message, tick=None):
        super().__init__(message)
        self.tick = tick


class PolyphonicInput(ComposeOnError):
    """Two notes sound simultaneously; only monophonic melodies are accepted."""


class UnsupportedEncoding(ComposeOnError):
    """WAV data is compressed or otherwise not plain PCM16/float32."""


class MalformedRiff(ComposeOnError):
    """Bytes are not a valid RIFF/WAVE container."""


class NoNotesDetected(ComposeOnError):
    """Pitch tracking found nothing that survives segmentation."""


class CaptureCancelled(ComposeOnError):
    """Cooperative cancellation was requested during pitch tracking."""


class ParseError(ComposeOnError):
    """Corpus or grammar text failed to parse."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class CountMismatch(ComposeOnError):
    """Corpus does not contain the expected number of entries."""


class DurationMismatch(ComposeOnError):
    """A rhythm pattern does not sum to one full measure."""


class CorpusExhausted(ComposeOnError):
    """Every progression available for this mode has already been recommended."""


class ScopeOutOfRange(ComposeOnError):
    """Explanation scope indexes a measure or phrase that does not exist."""


class MentorUnavailable(ComposeOnError):
    """Configured live mentor endpoint could not be reached."""


class IllegalState(ComposeOnError):
    """Operation is not legal in the session's current state."""


class SchemaVersionMismatch(ComposeOnError):
    """Persisted session file uses an unknown schema version."""


class ForbiddenEdit(ComposeOnError):
    """Attempt to edit an input (immutable) measure."""


class InvalidEdit(ComposeOnError):
    """Edit value is not among the offered alternatives."""


class UnsupportedMediaType(ComposeOnError):
    """Uploaded bytes are a media type the engine does not accept (mp3)."""
