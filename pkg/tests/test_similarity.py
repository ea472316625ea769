from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.similarity import (
    combined_similarity,
    jaro_winkler,
    levenshtein,
    levenshtein_similarity,
    realign_span,
)

from oracles import jaro_winkler_reference, levenshtein_matrix

short_text = st.text(alphabet="abcdefgh ", max_size=24)


class TestLevenshtein:
    def test_kitten_sitting(self):
        assert levenshtein("kitten", "sitting") == 3

    def test_identity(self):
        assert levenshtein("même", "même") == 0

    def test_pure_insertions(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3

    def test_matches_full_matrix_oracle(self):
        rng = Random(123)
        alphabet = "abcdef"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            assert levenshtein(a, b) == levenshtein_matrix(a, b)

    @settings(max_examples=150, deadline=None)
    @given(a=short_text, b=short_text)
    def test_symmetry(self, a, b):
        assert levenshtein(a, b) == levenshtein(b, a)

    @settings(max_examples=150, deadline=None)
    @given(a=short_text, b=short_text, c=short_text)
    def test_triangle_inequality(self, a, b, c):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    @settings(max_examples=100, deadline=None)
    @given(a=short_text, b=short_text)
    def test_identity_of_indiscernibles(self, a, b):
        assert (levenshtein(a, b) == 0) == (a == b)


class TestJaroWinkler:
    def test_martha_marhta(self):
        assert abs(jaro_winkler("martha", "marhta") - 0.9611) < 1e-4

    def test_identity_is_one(self):
        assert jaro_winkler("abc", "abc") == 1.0
        assert jaro_winkler("", "") == 1.0

    def test_zero_matches(self):
        assert jaro_winkler("abc", "xyz") == 0.0

    def test_matches_reference_formula(self):
        rng = Random(7)
        alphabet = "abcdefg"
        for _ in range(500):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 16)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 16)))
            assert abs(jaro_winkler(a, b) - jaro_winkler_reference(a, b)) < 1e-9

    @settings(max_examples=200, deadline=None)
    @given(a=short_text, b=short_text)
    def test_range_and_self_similarity(self, a, b):
        score = jaro_winkler(a, b)
        assert 0.0 <= score <= 1.0
        assert jaro_winkler(a, a) == 1.0


class TestRealignSpan:
    def test_exact_substring_leftmost(self):
        match = realign_span("chat noir", "le chat noir dort")
        assert (match.start, match.end) == (3, 12)
        assert match.score == 1.0
        assert match.exact

    def test_fuzzy_window_accepted(self):
        context = "le chat noir dort"
        match = realign_span("chats noir", context)
        assert not match.exact
        assert context[match.start : match.end] == "chat noir"
        # hand-derived: mean(1 - 1/10, jw("chats noir", "chat noir"))
        expected = 0.5 * (0.9 + jaro_winkler_reference("chats noir", "chat noir"))
        assert abs(match.score - expected) < 1e-9
        assert match.score >= 0.80

    def test_unrelated_answer_rejected(self):
        assert realign_span("éléphant", "le chat dort") is None

    def test_empty_arguments_error(self):
        with pytest.raises(ValueError):
            realign_span("", "context")
        with pytest.raises(ValueError):
            realign_span("answer", "")

    def test_tie_break_earliest_start(self):
        # identical candidate windows; the first occurrence wins
        match = realign_span("aba", "abc abc", align_threshold=0.5)
        assert match.start == 0

    def test_recovers_lightly_corrupted_spans(self):
        rng = Random(99)
        words = ["maison", "rivière", "soleil", "jardin", "montagne", "fenêtre", "voiture"]
        hits = 0
        trials = 60
        for _ in range(trials):
            sentence_words = [rng.choice(words) for _ in range(10)]
            context = " ".join(sentence_words)
            start_word = rng.randint(0, 7)
            span_words = sentence_words[start_word : start_word + 3]
            answer = " ".join(span_words)
            # corrupt with a single substitution
            position = rng.randint(0, len(answer) - 1)
            corrupted = answer[:position] + "z" + answer[position + 1 :]
            match = realign_span(corrupted, context)
            if match is None:
                continue
            window = context[match.start : match.end]
            if window == answer:
                hits += 1
        assert hits / trials >= 0.9


def test_combined_similarity_is_mean():
    a, b = "chats noir", "chat noir"
    assert combined_similarity(a, b) == pytest.approx(
        0.5 * (levenshtein_similarity(a, b) + jaro_winkler(a, b))
    )
