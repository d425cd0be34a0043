"""Batch command line: analyze, continue, and serve.

Exit codes: 0 success, 2 usage error, 3 input format error, 4 engine error.
``continue`` drives the same session engine as the HTTP service, so equal
inputs and seeds yield byte-identical MIDI on both paths.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .corpus import load_corpus
from .errors import (
    ComposeOnError,
    MalformedHeader,
    MalformedRiff,
    NoNotesDetected,
    ParseError,
    PolyphonicInput,
    TruncatedChunk,
    UnmatchedNoteOn,
    UnsupportedEncoding,
    UnsupportedMediaType,
)
from .explain import ExplanationLevel
from .generate import GenerationConfig
from .session import Session

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_ENGINE = 4

_INPUT_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    MalformedHeader,
    TruncatedChunk,
    UnmatchedNoteOn,
    MalformedRiff,
    UnsupportedEncoding,
    UnsupportedMediaType,
    PolyphonicInput,
    NoNotesDetected,
    ParseError,
)


def read_config_file(path: str) -> dict[str, str]:
    """key = value lines, '#' comments; merged under command-line flags."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _load_session(path: str, config: GenerationConfig, bpm: int | None) -> Session:
    data = Path(path).read_bytes()
    session = Session(db=load_corpus(), config=config)
    if data[:4] == b"MThd" or path.lower().endswith((".mid", ".midi")):
        session.upload_midi(data)
    else:
        session.upload_audio(data)
    session.process(bpm)
    return session


def _render_report(session: Session, level: str) -> str:
    analysis = session.analysis
    lines = ["# Continuation report", ""]
    lines.append(f"- Key: {analysis.key_name}"
                 + (" (ambiguous; best candidate chosen)" if analysis.ambiguous else ""))
    lines.append(f"- Input degrees: {' '.join(analysis.degrees)}")
    lines.append(f"- Fitted rhythm pattern: {analysis.fitted_rhythm_id}")
    lines.append(f"- Tempo: {session.bpm} BPM")
    lines.append(f"- Seed: {session.config.seed}")
    lines.append("")
    for index in range(len(session.piece.phrases)):
        phrase = session.piece.phrases[index]
        first = phrase.start_measure + 1
        last = phrase.start_measure + phrase.length
        lines.append(f"## Phrase {index + 1} (measures {first}-{last})")
        lines.append("")
        doc = session.explanation("phrase", index, level)
        for section in doc.sections:
            lines.append(f"### {section.aspect.capitalize()}")
            lines.append("")
            lines.append(re.sub(r"\[\[([^\]]+)\]\]", r"*\1*", section.text))
            lines.append("")
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    session = _load_session(args.infile, GenerationConfig(), args.bpm)
    analysis = session.analysis
    print(f"Key: {analysis.key_name}")
    if analysis.ambiguous:
        print("Warning: key detection was ambiguous; showing the best candidate")
    print(f"Degrees: {' '.join(analysis.degrees)}")
    chords = [c for c in analysis.measure_chords if c]
    print(f"Chords: {' '.join(chords)}")
    print(f"Fitted rhythm: pattern {analysis.fitted_rhythm_id} "
          f"(distance {analysis.fitted_distance})")
    print(f"Tempo: {session.bpm} BPM")
    if args.dump_pitch_csv:
        from .capture import decode_wav, pitch_track_csv, track_pitch
        if session.input_kind != "wav":
            print("--dump-pitch-csv requires a WAV input", file=sys.stderr)
            return EXIT_USAGE
        track = track_pitch(decode_wav(session.input_bytes))
        Path(args.dump_pitch_csv).write_text(pitch_track_csv(track))
        print(f"Pitch track written to {args.dump_pitch_csv}")
    return EXIT_OK


def cmd_continue(args) -> int:
    file_config = read_config_file(args.config) if args.config else {}

    def setting(flag_value, key, cast, default):
        if flag_value is not None:
            return flag_value
        if key in file_config:
            return cast(file_config[key])
        return default

    config = GenerationConfig(
        seed=setting(args.seed, "seed", int, 0),
        substitution_probability=setting(args.substitution_probability,
                                         "substitution_probability", float, 0.2),
        ornament_rate=setting(args.ornament_rate, "ornament_rate", float, 0.05),
    )
    bpm = setting(args.bpm, "bpm", int, None)
    phrases = setting(args.phrases, "phrases", int, 1)
    level = setting(args.level, "level", str, ExplanationLevel.INTERMEDIATE.value)
    if level not in [lv.value for lv in ExplanationLevel]:
        print(f"unknown level {level!r}", file=sys.stderr)
        return EXIT_USAGE

    session = _load_session(args.infile, config, bpm)
    for _ in range(phrases):
        session.continue_phrase()
    session.end()

    out_path = Path(args.out)
    out_path.write_bytes(session.export())
    print(f"Wrote {out_path} ({session.piece.score.measure_count} measures, "
          f"{len(session.piece.phrases)} phrases)")
    if args.report:
        Path(args.report).write_text(_render_report(session, level))
        print(f"Wrote {args.report}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service

    try:
        service.run(port=args.port, data_dir=args.data_dir)
    except (OSError, SystemExit) as exc:
        print(f"server failed to start: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="composeon",
        description="Extend a monophonic melody into a two-hand piece and explain it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="report key, chords, degrees, and rhythm fit")
    p_analyze.add_argument("--in", dest="infile", required=True, help="input .wav or .mid")
    p_analyze.add_argument("--bpm", type=int, default=None, help="tempo for WAV quantization")
    p_analyze.add_argument("--dump-pitch-csv", default=None,
                           help="write the raw pitch track (time,f0,confidence) to this CSV")
    p_analyze.set_defaults(func=cmd_analyze)

    p_continue = sub.add_parser("continue", help="generate phrases, a cadence, MIDI, and a report")
    p_continue.add_argument("--in", dest="infile", required=True, help="input .wav or .mid")
    p_continue.add_argument("--phrases", type=int, default=None, help="number of Continue clicks")
    p_continue.add_argument("--seed", type=int, default=None, help="generation seed")
    p_continue.add_argument("--bpm", type=int, default=None)
    p_continue.add_argument("--level", default=None,
                            choices=[lv.value for lv in ExplanationLevel])
    p_continue.add_argument("--substitution-probability", type=float, default=None)
    p_continue.add_argument("--ornament-rate", type=float, default=None)
    p_continue.add_argument("--out", required=True, help="output MIDI path")
    p_continue.add_argument("--report", default=None, help="output Markdown report path")
    p_continue.add_argument("--config", default=None,
                            help="key=value config file merged under flags")
    p_continue.set_defaults(func=cmd_continue)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--data-dir", default=None)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ComposeOnError, ValueError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
