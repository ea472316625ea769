from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.errors import DataError
from forge.evaluation import (
    EvalResult,
    MinimalPair,
    SentenceScore,
    aggregate_seeds,
    clams_accuracy,
    clams_per_example,
    nli_accuracy,
    normalize_answer,
    pll_pair_decision,
    qa_f1_em,
)

from oracles import bag_overlap_f1


class TestNormalizeAnswer:
    def test_english_articles_and_punctuation(self):
        assert normalize_answer("The Cat!", "en") == ["cat"]

    def test_french_elision_detached(self):
        assert normalize_answer("l'église", "fr") == ["église"]
        assert normalize_answer("d'eau", "fr") == ["eau"]

    def test_french_articles(self):
        assert normalize_answer("le chat et la porte", "fr") == ["chat", "et", "porte"]

    def test_empty(self):
        assert normalize_answer("", "en") == []

    def test_typographic_apostrophe(self):
        assert normalize_answer("l’école", "fr") == ["école"]


class TestQaF1Em:
    def test_identity(self):
        assert qa_f1_em("the cat", ["the cat"], "en") == (1.0, 1)

    def test_hand_case(self):
        f1, em = qa_f1_em("the cat sat", ["cat sat down"], "en")
        assert f1 == pytest.approx(0.8)
        assert em == 0

    def test_disjoint(self):
        assert qa_f1_em("dog", ["cat"], "en") == (0.0, 0)

    def test_max_over_golds(self):
        f1, em = qa_f1_em("cat", ["dog", "cat"], "en")
        assert (f1, em) == (1.0, 1)

    def test_empty_golds_error(self):
        with pytest.raises(ValueError):
            qa_f1_em("cat", [], "en")

    def test_em_implies_full_f1(self):
        f1, em = qa_f1_em("a cat", ["cat"], "en")  # article removed on both sides
        assert em == 1 and f1 == 1.0

    def test_matches_bag_overlap_oracle(self):
        rng = Random(5)
        vocabulary = ["cat", "dog", "sat", "down", "blue", "tree", "sun", "the"]
        for _ in range(300):
            pred = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(0, 6)))
            gold = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(1, 6)))
            f1, _ = qa_f1_em(pred, [gold], "en")
            expected = bag_overlap_f1(normalize_answer(pred, "en"), normalize_answer(gold, "en"))
            assert f1 == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(
        pred=st.text(alphabet="ab ", max_size=12),
        golds=st.lists(st.text(alphabet="ab ", max_size=12), min_size=1, max_size=4),
        extra=st.text(alphabet="ab ", max_size=12),
    )
    def test_gold_monotonicity(self, pred, golds, extra):
        f1_before, _ = qa_f1_em(pred, golds, "en")
        f1_after, _ = qa_f1_em(pred, [*golds, extra], "en")
        assert f1_after >= f1_before


class TestNliAccuracy:
    def test_all_correct(self):
        assert nli_accuracy(["entailment"] * 3, ["entailment"] * 3) == 1.0

    def test_half(self):
        preds = ["entailment", "neutral", "contradiction", "neutral"]
        golds = ["entailment", "neutral", "neutral", "contradiction"]
        assert nli_accuracy(preds, golds) == 0.5

    def test_all_wrong(self):
        assert nli_accuracy(["neutral"] * 2, ["entailment"] * 2) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nli_accuracy(["entailment"], ["entailment", "neutral"])

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            nli_accuracy(["maybe"], ["entailment"])


def score(pair_id, role, logprobs, phenomenon=None):
    return SentenceScore(
        pair_id=pair_id,
        role=role,
        tokens=tuple(f"t{i}" for i in range(len(logprobs))),
        logprobs=tuple(logprobs),
        phenomenon=phenomenon,
    )


class TestPllPairDecision:
    def test_strict_ordering(self):
        assert pll_pair_decision(score("p", "good", [-1.0, -2.0]), score("p", "bad", [-4.0]))

    def test_tie_counts_incorrect(self):
        assert not pll_pair_decision(score("p", "good", [-2.0]), score("p", "bad", [-2.0]))

    def test_no_length_normalization(self):
        good = score("p", "good", [-1.0, -2.0, -2.0])  # sum -5
        bad = score("p", "bad", [-1.5, -1.5])  # sum -3
        assert not pll_pair_decision(good, bad)

    def test_mismatched_pair_id(self):
        with pytest.raises(ValueError):
            pll_pair_decision(score("p", "good", [-1.0]), score("q", "bad", [-2.0]))

    def test_nan_is_data_error(self):
        with pytest.raises(DataError):
            pll_pair_decision(score("p", "good", [float("nan")]), score("p", "bad", [-1.0]))

    def test_positive_logprob_rejected_at_parse(self):
        with pytest.raises(DataError):
            score("p", "good", [0.5])

    def test_token_logprob_length_mismatch(self):
        with pytest.raises(DataError):
            SentenceScore("p", "good", ("a", "b"), (-1.0,))


def three_pair_fixture():
    pairs = [
        MinimalPair("p1", "sv_agreement", "the cat sleeps", "the cat sleep", "en"),
        MinimalPair("p2", "sv_agreement", "dogs bark", "dogs barks", "en"),
        MinimalPair("p3", "anaphora", "she likes herself", "she likes himself", "en"),
    ]
    scores = [
        score("p1", "good", [-1.0, -1.0], "sv_agreement"),
        score("p1", "bad", [-2.0, -2.0], "sv_agreement"),  # correct
        score("p2", "good", [-0.5], "sv_agreement"),
        score("p2", "bad", [-0.9], "sv_agreement"),  # correct
        score("p3", "good", [-3.0], "anaphora"),
        score("p3", "bad", [-3.0], "anaphora"),  # tie -> incorrect
    ]
    return pairs, scores


class TestClamsAccuracy:
    def test_hand_fixture_two_thirds(self):
        pairs, scores = three_pair_fixture()
        overall, per_phenomenon = clams_accuracy(pairs, scores)
        assert overall == pytest.approx(2 / 3)
        assert per_phenomenon == {"anaphora": 0.0, "sv_agreement": 1.0}

    def test_all_correct(self):
        pairs, scores = three_pair_fixture()
        scores = [s for s in scores if s.pair_id != "p3"]
        scores += [score("p3", "good", [-1.0]), score("p3", "bad", [-2.0])]
        overall, _ = clams_accuracy(pairs, scores)
        assert overall == 1.0

    def test_empty_is_data_error(self):
        with pytest.raises(DataError):
            clams_accuracy([], [])

    def test_missing_score_names_pair(self):
        pairs, scores = three_pair_fixture()
        with pytest.raises(DataError, match="p3"):
            clams_accuracy(pairs, scores[:4])

    def test_duplicate_score_names_pair(self):
        pairs, scores = three_pair_fixture()
        with pytest.raises(DataError, match="p1"):
            clams_accuracy(pairs, scores + [score("p1", "good", [-9.0])])

    def test_overall_is_example_weighted_recount(self):
        # brute-force recount over each pair's summed logprobs
        pairs, scores = three_pair_fixture()
        overall, _ = clams_accuracy(pairs, scores)
        by_key = {(s.pair_id, s.role): sum(s.logprobs) for s in scores}
        recount = sum(
            by_key[(p.pair_id, "good")] > by_key[(p.pair_id, "bad")] for p in pairs
        ) / len(pairs)
        assert overall == pytest.approx(recount)

    def test_argmax_invariances(self):
        rng = Random(13)
        for _ in range(200):
            n_good = rng.randint(1, 6)
            n_bad = rng.randint(1, 6)
            good = score("p", "good", [-rng.random() * 5 for _ in range(n_good)])
            bad = score("p", "bad", [-rng.random() * 5 for _ in range(n_bad)])
            base = pll_pair_decision(good, bad)
            lam = rng.random() * 3 + 0.1
            scaled_good = score("p", "good", [lp * lam for lp in good.logprobs])
            scaled_bad = score("p", "bad", [lp * lam for lp in bad.logprobs])
            assert pll_pair_decision(scaled_good, scaled_bad) == base
            if n_good == n_bad:
                shift = -rng.random() * 2
                shifted_good = score("p", "good", [lp + shift for lp in good.logprobs])
                shifted_bad = score("p", "bad", [lp + shift for lp in bad.logprobs])
                assert pll_pair_decision(shifted_good, shifted_bad) == base


def result(value, seed=1, per_example=None, task="xnli", corpus="en-wikipedia",
           setup="monolingual", lang="en", metric="accuracy"):
    return EvalResult(task, setup, corpus, lang, seed, metric, value, per_example)


class TestEvalResult:
    def test_range_validation(self):
        with pytest.raises(ValueError):
            result(101.0)

    def test_per_example_mean_must_match(self):
        with pytest.raises(ValueError):
            result(50.0, per_example=(("a", 1.0), ("b", 1.0)))

    def test_round_trip(self):
        r = result(50.0, per_example=(("a", 1.0), ("b", 0.0)))
        assert EvalResult.from_dict(r.to_dict()) == r


class TestAggregateSeeds:
    def test_arithmetic_mean(self):
        results = [result(60.0, seed=1), result(62.0, seed=2), result(61.0, seed=3)]
        assert aggregate_seeds(results).value == pytest.approx(61.0)

    def test_single_seed_identity(self):
        r = result(60.0, seed=1)
        assert aggregate_seeds([r]) is r

    def test_duplicate_seeds_error(self):
        with pytest.raises(ValueError):
            aggregate_seeds([result(60.0, seed=1), result(62.0, seed=1)])

    def test_mixed_configuration_error(self):
        with pytest.raises(ValueError):
            aggregate_seeds([result(60.0, seed=1), result(60.0, seed=2, task="squad")])

    def test_permutation_invariance(self):
        results = [
            result(60.0, seed=1, per_example=(("a", 0.6), ("b", 0.6))),
            result(62.0, seed=2, per_example=(("a", 0.62), ("b", 0.62))),
            result(61.0, seed=3, per_example=(("a", 0.61), ("b", 0.61))),
        ]
        forward = aggregate_seeds(results)
        backward = aggregate_seeds(list(reversed(results)))
        assert forward == backward

    def test_per_example_tagged_by_seed(self):
        results = [
            result(60.0, seed=2, per_example=(("a", 0.6), ("b", 0.6))),
            result(40.0, seed=1, per_example=(("a", 0.4), ("b", 0.4))),
        ]
        aggregated = aggregate_seeds(results)
        assert aggregated.seed == (1, 2)
        assert [i for i, _ in aggregated.per_example] == ["1:a", "1:b", "2:a", "2:b"]
        assert aggregated.value == pytest.approx(50.0)


def test_clams_per_example_matches_accuracy():
    pairs, scores = three_pair_fixture()
    rows, breakdown = clams_per_example(pairs, scores)
    assert [v for _, v in rows] == [1.0, 1.0, 0.0]
    assert breakdown == {"anaphora": 0.0, "sv_agreement": 1.0}
