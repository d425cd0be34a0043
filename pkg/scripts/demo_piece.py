#!/usr/bin/env python3
"""Generate the D-major demo piece end to end and print what happened.

Builds the two-measure demo melody (D and G triad arpeggios), analyzes it,
runs a few Continue clicks plus the closing cadence, writes the MIDI and a
report, and prints the phrase-by-phrase summary.

Usage: python scripts/demo_piece.py [--seed N] [--phrases N] [--out DIR]
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from composeon.corpus import load_corpus
from composeon.generate import GenerationConfig, continue_piece, end_piece, start_piece
from composeon.midi import export_midi_bytes
from composeon.score import Hand, Measure, Part, Score, note
from composeon.theory import detect_chords, detect_scale


def demo_melody() -> Score:
    return Score([Part(Hand.RIGHT, [
        Measure(0, [note(0, 2, 62), note(2, 1, 66), note(3, 1, 69)]),
        Measure(1, [note(0, 1, 67), note(1, 1, 71), note(2, 2, 62)]),
    ])], bpm=120)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--phrases", type=int, default=3)
    parser.add_argument("--out", default=".")
    args = parser.parse_args()

    db = load_corpus()
    melody = demo_melody()
    ranking = detect_scale(melody)
    key = ranking[0].key
    chords = detect_chords(melody, key)
    print(f"Detected key: {key.name} (coverage {float(ranking[0].score):.2f})")
    print(f"Detected chords: {[c.display for c in chords]}")

    piece = start_piece(melody, key, chords, fitted_rhythm_id=2,
                        config=GenerationConfig(seed=args.seed))
    for click in range(args.phrases):
        phrase = continue_piece(piece, db)
        marks = ["*" if s else " " for s in phrase.substituted]
        print(f"Continue {click + 1}: {phrase.entry_id} -> "
              f"{'-'.join(d.display for d in phrase.progression)} "
              f"(substituted: {''.join(marks).strip() or 'none'}), "
              f"rhythms {phrase.rhythm_plan}")
    final = end_piece(piece)
    print(f"End: cadence measure {final + 1} on "
          f"{piece.right_hand().measures[final].chord.display}")

    out = Path(args.out) / f"demo_seed{args.seed}.mid"
    out.write_bytes(export_midi_bytes(piece.score))
    total_beats = piece.score.measure_count * Fraction(4)
    print(f"Wrote {out}: {piece.score.measure_count} measures ({total_beats} beats)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
