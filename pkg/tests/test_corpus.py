from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from composeon.corpus import (
    EXPECTED_CATEGORY_COUNTS,
    Category,
    CorpusDb,
    RhythmPattern,
    fit_rhythm,
    load_corpus,
    parse_progression_file,
    parse_rhythm_file,
    rank_progressions,
    rasterize_measure,
    rasterize_pattern,
    similarity_ratio,
)
from composeon.errors import CountMismatch, DurationMismatch, ParseError
from composeon.rng import Rng
from composeon.score import Measure, Mode, note, parse_degree, rest


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def oracle_matched(a, b):
    """Exhaustive longest-matching-block recursion with leftmost-longest
    tie-breaks (earliest in a, then earliest in b)."""
    best_i = best_j = best_k = 0
    for i in range(len(a)):
        for j in range(len(b)):
            k = 0
            while i + k < len(a) and j + k < len(b) and a[i + k] == b[j + k]:
                k += 1
            if k > best_k:
                best_i, best_j, best_k = i, j, k
    if best_k == 0:
        return 0
    return (best_k
            + oracle_matched(a[:best_i], b[:best_j])
            + oracle_matched(a[best_i + best_k:], b[best_j + best_k:]))


def oracle_ratio(a, b):
    total = len(a) + len(b)
    if total == 0:
        return Fraction(1)
    return Fraction(2 * oracle_matched(list(a), list(b)), total)


def oracle_slots(event_triples):
    """Brute-force rasterization: walk every 1/12 slot and classify it."""
    slots = []
    for s in range(48):
        t = Fraction(s, 12)
        code = "r"
        for onset, dur, is_note in event_triples:
            if onset <= t < onset + dur and is_note:
                code = "o" if t == onset else "s"
        slots.append(code)
    return tuple(slots)


DEG = parse_degree


def degs(text):
    return [parse_degree(t) for t in text.split()]


@pytest.fixture(scope="module")
def db():
    return load_corpus()


# ---------------------------------------------------------------------------
# Loading & validation
# ---------------------------------------------------------------------------

class TestLoadCorpus:
    def test_shipped_counts(self, db):
        assert len(db.progressions) == 39
        assert len(db.rhythms) == 16
        counts = {}
        for e in db.progressions:
            counts[e.category.value] = counts.get(e.category.value, 0) + 1
        assert counts == EXPECTED_CATEGORY_COUNTS

    def test_all_rhythms_sum_to_four(self, db):
        for p in db.rhythms:
            assert p.total_beats == 4

    def test_quoted_progressions_present(self, db):
        displays = {e.display for e in db.progressions}
        for quoted in (
            "I IV V I",
            "vi IV V I",
            "Imaj7 ii7 V7 Imaj7",
            "i iidim V7 i",
            "I IV aug4 I",
            "Imaj7 ii7 V7 IVmaj7",
            "Imaj7 bIImaj7 V7 Imaj7",
            "Imaj7 ii7 V7 iii7",
        ):
            assert quoted in displays, quoted

    def test_quoted_rhythms_present(self, db):
        one = db.rhythm(1)
        assert list(one.events) == [(Fraction(1), "rest"), (Fraction(1), "note"),
                                    (Fraction(1), "rest"), (Fraction(1), "note")]
        seven = db.rhythm(7)
        assert list(seven.events) == [(Fraction(1, 3), "note")] * 12

    def test_digest_stable(self, db):
        assert db.source_digest == load_corpus().source_digest
        assert len(db.source_digest) == 64

    def test_round_trip_serialization(self, db):
        prog_text = "\n".join(
            f"{e.id} | {e.category.value} | {e.mode} | {e.display}" for e in db.progressions
        )
        rhythm_text = "\n".join(
            f"{p.id} | {p.style_tag} | {p.display}" for p in db.rhythms
        )
        assert parse_progression_file(prog_text) == list(db.progressions)
        assert parse_rhythm_file(rhythm_text) == list(db.rhythms)

    def test_progression_parses_to_degrees(self):
        entries = parse_progression_file("x-1 | classic | major | I IV V I")
        assert list(entries[0].degrees) == degs("I IV V I")

    def test_bad_rhythm_duration_rejected(self):
        with pytest.raises(DurationMismatch):
            parse_rhythm_file("1 | pop | (1 note)(1 note)(1 note)(1/2 note)")

    def test_duplicate_id_rejected(self):
        with pytest.raises(ParseError):
            parse_progression_file(
                "a | classic | major | I IV V I\na | classic | major | I V vi IV"
            )

    def test_count_mismatch_rejected(self, tmp_path):
        bad = tmp_path / "progs.txt"
        bad.write_text("only-1 | classic | major | I IV V I\n")
        with pytest.raises(CountMismatch):
            load_corpus(progression_file=bad)

    def test_parse_error_carries_line(self):
        with pytest.raises(ParseError) as err:
            parse_progression_file("# fine\nbroken line without pipes")
        assert err.value.line == 2


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------

class TestSimilarityRatio:
    def test_identical(self):
        assert similarity_ratio(degs("I IV V I"), degs("I IV V I")) == 1

    def test_prefix_of_longer_progression(self):
        assert similarity_ratio(degs("I IV"), degs("I IV V I")) == Fraction(2, 3)

    def test_disjoint(self):
        assert similarity_ratio(degs("ii"), degs("I IV V I")) == 0

    def test_empty_convention(self):
        assert similarity_ratio([], []) == 1

    def test_exact_rational_type(self):
        got = similarity_ratio(degs("I IV"), degs("I IV ii V I"))
        assert got == Fraction(4, 7)

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.sampled_from("abcd"), max_size=6),
        st.lists(st.sampled_from("abcd"), max_size=6),
    )
    def test_matches_exhaustive_oracle(self, a, b):
        assert similarity_ratio(a, b) == oracle_ratio(a, b)

    def test_matches_oracle_on_degree_tokens(self):
        rng = Rng(2024)
        alphabet = degs("I IV V vi")
        for _ in range(500):
            a = [rng.choice(alphabet) for _ in range(rng.next_below(7))]
            b = [rng.choice(alphabet) for _ in range(rng.next_below(7))]
            assert similarity_ratio(a, b) == oracle_ratio(a, b)


class TestRankProgressions:
    def test_demo_input_family_ranking(self, db):
        ranked = rank_progressions(degs("I IV"), db, Mode.MAJOR)
        by_id = {e.id: (i, ratio) for i, (e, ratio) in enumerate(ranked)}
        # the four family members quoted for the demo input
        assert by_id["classic-01"][1] == Fraction(2, 3)      # I IV V I
        assert by_id["classic-03"][1] == Fraction(4, 7)      # I IV ii V I
        assert by_id["diminished-02"][1] == Fraction(2, 3)   # I IV viidim I
        assert by_id["extended-02"][1] == Fraction(2, 3)     # I IV V7 I
        assert ranked[0][0].id == "classic-01"  # ties break classic-first, id order

    def test_exact_match_ranks_first(self, db):
        entry = db.progression("cycle-01")
        ranked = rank_progressions(list(entry.degrees), db, Mode.MAJOR)
        assert ranked[0][0].id == "cycle-01"
        assert ranked[0][1] == 1

    def test_minor_demo(self, db):
        ranked = rank_progressions(degs("i iidim"), db, Mode.MINOR)
        assert ranked[0][0].id == "diminished-01"  # i iidim V7 i

    def test_mode_filter_is_partition(self, db):
        major = rank_progressions(degs("I"), db, Mode.MAJOR)
        minor = rank_progressions(degs("I"), db, Mode.MINOR)
        ids = {e.id for e, _ in major} | {e.id for e, _ in minor}
        both = {e.id for e, _ in major} & {e.id for e, _ in minor}
        assert ids == {e.id for e in db.progressions}
        assert both == {e.id for e in db.progressions if e.mode == "both"}

    def test_deterministic_total_order(self, db):
        a = rank_progressions(degs("I V"), db, Mode.MAJOR)
        b = rank_progressions(degs("I V"), db, Mode.MAJOR)
        assert [e.id for e, _ in a] == [e.id for e, _ in b]

    def test_empty_input_rejected(self, db):
        with pytest.raises(ValueError):
            rank_progressions([], db, Mode.MAJOR)


# ---------------------------------------------------------------------------
# Rhythm fitting
# ---------------------------------------------------------------------------

def measure_from_pattern(pattern: RhythmPattern, midi=72) -> Measure:
    onset = Fraction(0)
    events = []
    for dur, kind in pattern.events:
        events.append(note(onset, dur, midi) if kind == "note" else rest(onset, dur))
        onset += dur
    return Measure(0, events)


class TestFitRhythm:
    def test_offbeat_quarters_match_pattern_one(self, db):
        m = Measure(0, [rest(0, 1), note(1, 1, 72), rest(2, 1), note(3, 1, 74)])
        pattern, distance = fit_rhythm(m, db)
        assert pattern.id == 1
        assert distance == 0

    def test_self_fit_every_pattern(self, db):
        for p in db.rhythms:
            pattern, distance = fit_rhythm(measure_from_pattern(p), db)
            assert distance == 0
            # distance 0 iff identical rasters; ties go to the lowest id
            assert rasterize_pattern(pattern) == rasterize_pattern(p)
            assert pattern.id <= p.id

    def test_four_quarters_vs_pattern_one_slot_oracle(self, db):
        m = Measure(0, [note(0, 1, 60), note(1, 1, 62), note(2, 1, 64), note(3, 1, 65)])
        grid = rasterize_measure(m)
        pattern_grid = rasterize_pattern(db.rhythm(1))
        oracle = sum(1 for a, b in zip(grid, pattern_grid) if a != b)
        assert oracle == 24  # two rest-beats differ in all 12 slots each
        # and the overall fit must prefer the all-quarters pattern (id 2)
        pattern, distance = fit_rhythm(m, db)
        assert pattern.id == 2
        assert distance == 0

    def test_rasterizer_matches_brute_force(self, db):
        for p in db.rhythms:
            onset = Fraction(0)
            triples = []
            for dur, kind in p.events:
                triples.append((onset, dur, kind == "note"))
                onset += dur
            assert rasterize_pattern(p) == oracle_slots(triples)

    def test_distance_zero_iff_identical(self, db):
        m = measure_from_pattern(db.rhythm(13))
        pattern, distance = fit_rhythm(m, db)
        assert distance == 0
        assert rasterize_pattern(pattern) == rasterize_measure(m)

    def test_empty_measure_rejected(self, db):
        bad = Measure.__new__(Measure)
        bad.index = 0
        bad.events = []
        with pytest.raises(ValueError):
            fit_rhythm(bad, db)
