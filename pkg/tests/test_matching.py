import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refnet.corpus import AuthorRecord, TextRecord
from refnet.errors import IntegrityError, PatternCollisionError
from refnet.matching import ScanConfig, compile_patterns, extract_context, scan_text, scan_texts

from corpusgen import AUTHOR_SPECS, EXCLUDED_NAMES, generate_corpus, surname_of
from oracles import naive_scan


def author(author_id, match_name=None, policy="normal", birth=1700, death=1780):
    return AuthorRecord(
        author_id=author_id,
        display_name=author_id.capitalize(),
        match_name=match_name or author_id.capitalize(),
        birth_year=birth,
        death_year=death,
        policy=policy,
    )


AUTHORS = [author("kant"), author("hume"), author("plato"), author("fichte"), author("oneill", "O'Neill")]


def text(body, author_id="fichte", text_id="t1"):
    return TextRecord(
        text_id=text_id,
        author_id=author_id,
        title="T",
        category="philosophy",
        body=body,
        raw_length=len(body),
        body_length=len(body),
    )


def fixture_author_records():
    records = []
    for name, birth, death, policy, _ in AUTHOR_SPECS:
        surname = surname_of(name)
        records.append(
            AuthorRecord(
                author_id=surname.lower(),
                display_name=name,
                match_name=surname,
                birth_year=birth,
                death_year=death,
                policy=policy,
            )
        )
    return records


class TestCompilePatterns:
    def test_matches_exactly_the_given_surfaces(self):
        automaton = compile_patterns([author("kant"), author("hume"), author("plato")])
        found = {p.author_id for _, p in automaton.find_matches("Kant met Hume and Plato but not Hegel.")}
        assert found == {"kant", "hume", "plato"}

    def test_colliding_surfaces_raise_naming_both_authors(self):
        with pytest.raises(PatternCollisionError) as exc:
            compile_patterns([author("smith-a", "Smith"), author("smith-b", "Smith")])
        assert "smith-a" in str(exc.value) and "smith-b" in str(exc.value)

    def test_empty_after_exclusions_is_a_precondition_error(self):
        with pytest.raises(ValueError):
            compile_patterns([author("kant", policy="excluded")])

    def test_excluded_authors_get_no_patterns(self):
        automaton = compile_patterns([author("kant"), author("bell", policy="excluded")])
        assert {p.author_id for p in automaton.patterns} == {"kant"}
        assert "bell" in automaton.known_authors


class TestScanText:
    def test_two_references_at_known_offsets(self):
        records = scan_text(text("Kant wrote to Hume."), compile_patterns(AUTHORS), ScanConfig())
        got = [(r.cited_author_id, r.offset) for r in records]
        assert got == [("kant", 0), ("hume", 14)]
        expected = naive_scan(
            "Kant wrote to Hume.",
            "fichte",
            {a.author_id: a.match_name for a in AUTHORS},
            "word_boundary_plus_possessive",
            250,
            150,
        )
        assert [(r.cited_author_id, r.offset, r.context) for r in records] == expected

    def test_self_references_are_omitted(self):
        body = "Kant, Kant, Kant, Kant, and Kant again."
        records = scan_text(text(body, author_id="kant"), compile_patterns(AUTHORS), ScanConfig())
        assert records == []

    def test_cap_keeps_first_250_of_300_occurrences(self):
        body = " ".join("Plato spoke." for _ in range(300))
        records = scan_text(text(body), compile_patterns(AUTHORS), ScanConfig())
        assert len(records) == 250
        offsets = [r.offset for r in records]
        assert offsets == sorted(offsets)
        assert offsets[0] == 0

    def test_cap_is_per_cited_author_by_default(self):
        body = " ".join("Plato met Hume." for _ in range(300))
        records = scan_text(text(body), compile_patterns(AUTHORS), ScanConfig(per_text_target_cap=10))
        by_author = {}
        for r in records:
            by_author[r.cited_author_id] = by_author.get(r.cited_author_id, 0) + 1
        assert by_author == {"plato": 10, "hume": 10}

    def test_cap_scope_per_text_total(self):
        body = " ".join("Plato met Hume." for _ in range(300))
        config = ScanConfig(per_text_target_cap=10, cap_scope="per_text_total")
        records = scan_text(text(body), compile_patterns(AUTHORS), config)
        assert len(records) == 10

    def test_unknown_citing_author_is_an_integrity_error(self):
        with pytest.raises(IntegrityError):
            scan_text(text("Kant.", author_id="nobody"), compile_patterns(AUTHORS), ScanConfig())

    def test_offset_fidelity(self):
        body = "Hume's essay reached Kant, and Plato's dialogues reached Hume."
        automaton = compile_patterns(AUTHORS)
        for r in scan_text(text(body), automaton, ScanConfig()):
            surface = next(p.surface for p in automaton.patterns if p.author_id == r.cited_author_id)
            assert body[r.offset : r.offset + len(surface)] == surface


class TestBoundaries:
    @pytest.mark.parametrize(
        "body,expect",
        [
            ("Kantian philosophy.", []),
            ("the Kants of this world", []),
            ("Kant's critique", [("kant", 0)]),
            ("so speaks Kant.", [("kant", 10)]),
            ("'Kant' in quotes", [("kant", 1)]),
            ("anti-Kant polemic", [("kant", 5)]),
            ("Kant’s curly possessive", [("kant", 0)]),
            ("Kantsome nonsense", []),
        ],
    )
    def test_possessive_rule(self, body, expect):
        records = scan_text(text(body), compile_patterns(AUTHORS), ScanConfig())
        assert [(r.cited_author_id, r.offset) for r in records] == expect

    def test_plain_word_boundary_rejects_possessive(self):
        automaton = compile_patterns(AUTHORS, boundary_rule="word_boundary")
        records = scan_text(text("Kant's critique"), automaton, ScanConfig(boundary_rule="word_boundary"))
        assert records == []

    def test_apostrophe_surname_matches_whole(self):
        records = scan_text(text("see O'Neill on this"), compile_patterns(AUTHORS), ScanConfig())
        assert [(r.cited_author_id, r.offset) for r in records] == [("oneill", 4)]
        # "Neill" alone (if it were a pattern) must not match inside O'Neill.
        neil = compile_patterns([author("neill", "Neill"), author("fichte")])
        assert scan_text(text("see O'Neill on this"), neil, ScanConfig()) == []

    def test_case_sensitive(self):
        records = scan_text(text("the kant doctrine"), compile_patterns(AUTHORS), ScanConfig())
        assert records == []


class TestExtractContext:
    def test_match_at_start_has_no_leading_chars(self):
        body = "Kant" + "x" * 200
        assert extract_context(body, 0, 4, 150) == body[: 4 + 75]

    def test_centered_match_window_150(self):
        body = "x" * 200 + "Kant" + "y" * 200
        context = extract_context(body, 200, 4, 150)
        assert len(context) == 150 + 4
        assert context == body[125 : 200 + 4 + 75]

    def test_window_zero_is_the_surface(self):
        assert extract_context("abc Kant xyz", 4, 4, 0) == "Kant"

    def test_odd_window_splits_floor_before_ceil_after(self):
        body = "a" * 50 + "K" + "b" * 50
        context = extract_context(body, 50, 1, 7)
        assert context == "a" * 3 + "K" + "b" * 4

    def test_out_of_bounds_raises(self):
        with pytest.raises(ValueError):
            extract_context("short", 3, 10, 150)


class TestOracleEquivalence:
    def test_fixture_corpus_scan_equals_naive_scanner(self):
        corpus = generate_corpus()
        authors = fixture_author_records()
        automaton = compile_patterns(authors)
        config = ScanConfig()
        surfaces = {a.author_id: a.match_name for a in authors if a.policy != "excluded"}
        by_name = {a.display_name: a for a in authors}
        for t in corpus.texts:
            if t.author_name not in by_name:
                continue
            citing = by_name[t.author_name].author_id
            record = text(t.body, author_id=citing, text_id=t.text_id)
            got = [(r.cited_author_id, r.offset, r.context) for r in scan_text(record, automaton, config)]
            want = naive_scan(t.body, citing, surfaces, "word_boundary_plus_possessive", 250, 150)
            assert got == want, f"divergence in {t.text_id}"

    def test_excluded_author_never_appears_as_cited(self):
        corpus = generate_corpus()
        authors = fixture_author_records()
        automaton = compile_patterns(authors)
        excluded = {surname_of(n).lower() for n in EXCLUDED_NAMES}
        by_name = {a.display_name: a for a in authors}
        for t in corpus.texts:
            if t.author_name not in by_name:
                continue
            record = text(t.body, author_id=by_name[t.author_name].author_id, text_id=t.text_id)
            for r in scan_text(record, automaton, ScanConfig()):
                assert r.cited_author_id not in excluded

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sampled_from(["Kant", "Hume", "Plato", "Kantian", "Kant's", "kant", "the", "old", "-", ".", "'"]), max_size=40))
    def test_random_token_streams_match_naive(self, tokens):
        body = " ".join(tokens)
        if not body:
            return
        records = scan_text(text(body), compile_patterns(AUTHORS), ScanConfig(per_text_target_cap=5))
        want = naive_scan(
            body,
            "fichte",
            {a.author_id: a.match_name for a in AUTHORS},
            "word_boundary_plus_possessive",
            5,
            150,
        )
        assert [(r.cited_author_id, r.offset, r.context) for r in records] == want


class TestDeterminism:
    def test_parallel_scan_merges_deterministically(self):
        corpus = generate_corpus()
        authors = fixture_author_records()
        automaton = compile_patterns(authors)
        by_name = {a.display_name: a for a in authors}
        texts = [
            text(t.body, author_id=by_name[t.author_name].author_id, text_id=t.text_id)
            for t in corpus.texts
            if t.author_name in by_name
        ]
        rng = random.Random(3)
        shuffled = texts[:]
        rng.shuffle(shuffled)
        sequential = scan_texts(texts, automaton, ScanConfig(), workers=1)
        parallel = scan_texts(shuffled, automaton, ScanConfig(), workers=4)
        assert sequential == parallel
