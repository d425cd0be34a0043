#!/usr/bin/env python3
"""Print corpus statistics and the similarity ranking for a degree query.

Usage: python scripts/corpus_stats.py [--query "I IV"] [--mode major]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from composeon.corpus import load_corpus, rank_progressions
from composeon.score import Mode, parse_degree


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--query", default="I IV")
    parser.add_argument("--mode", choices=["major", "minor"], default="major")
    parser.add_argument("--top", type=int, default=10)
    args = parser.parse_args()

    db = load_corpus()
    print(f"corpus digest: {db.source_digest[:16]}…")
    by_category = {}
    for entry in db.progressions:
        by_category.setdefault(entry.category.value, []).append(entry)
    for category, entries in by_category.items():
        print(f"  {category:<11} {len(entries):>2} entries")
    print(f"  rhythms     {len(db.rhythms):>2} patterns "
          f"({', '.join(sorted(set(p.style_tag for p in db.rhythms)))})")

    degrees = [parse_degree(t) for t in args.query.split()]
    ranked = rank_progressions(degrees, db, Mode(args.mode))
    print(f"\ntop {args.top} matches for '{args.query}' ({args.mode}):")
    for entry, ratio in ranked[:args.top]:
        print(f"  {float(ratio):.3f}  {entry.id:<14} {entry.display}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
