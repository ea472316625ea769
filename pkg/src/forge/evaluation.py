"""Task metrics: extractive-QA F1/EM, NLI accuracy, and minimal-pair
pseudo-log-likelihood accuracy, plus multi-seed aggregation.

All metrics are computed from model-emitted prediction/score files; no
model inference happens here.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DataError

TASKS = ("squad", "qamr", "qasrl", "xnli", "clams")
SETUPS = ("monolingual", "bilingual", "cross_lingual")
METRICS = ("f1", "em", "accuracy")
NLI_LABELS = ("entailment", "contradiction", "neutral")

_ARTICLES = {
    "en": frozenset({"a", "an", "the"}),
    "fr": frozenset({"le", "la", "les", "un", "une", "des", "du"}),
}

# Elided l'/d' prefixes are detached before punctuation stripping, otherwise
# "l'église" would collapse into "léglise".
_FR_ELISION = re.compile(r"\b[ld]['’]")

_PUNCTUATION = frozenset(string.punctuation) | frozenset("’‘“”«»…")


def normalize_answer(text: str, language: str = "en") -> list[str]:
    """Normalize an answer string into comparison tokens."""
    text = text.lower()
    if language == "fr":
        text = _FR_ELISION.sub(" ", text)
    text = "".join(ch for ch in text if ch not in _PUNCTUATION)
    articles = _ARTICLES.get(language, frozenset())
    return [token for token in text.split() if token not in articles]


def _bag_f1(pred_tokens: Sequence[str], gold_tokens: Sequence[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def qa_f1_em(pred: str, golds: Sequence[str], language: str = "en") -> tuple[float, int]:
    """Bag-of-tokens F1 and exact match, each maxed over the gold answers."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = normalize_answer(pred, language)
    best_f1 = 0.0
    best_em = 0
    for gold in golds:
        gold_tokens = normalize_answer(gold, language)
        best_f1 = max(best_f1, _bag_f1(pred_tokens, gold_tokens))
        best_em = max(best_em, int(pred_tokens == gold_tokens))
    return best_f1, best_em


def nli_accuracy(preds: Sequence[str], golds: Sequence[str]) -> float:
    """Fraction of exact 3-way label matches."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise ValueError("empty prediction list")
    for label in (*preds, *golds):
        if label not in NLI_LABELS:
            raise ValueError(f"unknown NLI label {label!r}")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


@dataclass(frozen=True)
class MinimalPair:
    """A grammatical/ungrammatical sentence pair for one syntactic phenomenon."""

    pair_id: str
    phenomenon: str
    good: str
    bad: str
    language: str

    def __post_init__(self) -> None:
        if not self.good or not self.bad:
            raise ValueError(f"pair {self.pair_id!r}: sentences must be non-empty")
        if self.good == self.bad:
            raise ValueError(f"pair {self.pair_id!r}: good and bad sentences are identical")


@dataclass(frozen=True)
class SentenceScore:
    """Per-token log-probabilities for one side of a minimal pair."""

    pair_id: str
    role: str  # good | bad
    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]
    phenomenon: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ("good", "bad"):
            raise ValueError(f"unknown score role {self.role!r}")
        if len(self.tokens) != len(self.logprobs):
            raise DataError(
                f"pair {self.pair_id!r} ({self.role}): {len(self.tokens)} tokens but "
                f"{len(self.logprobs)} logprobs"
            )
        # Log-probabilities must be <= 0 up to numerical slack.
        for value in self.logprobs:
            if value > 1e-6:
                raise DataError(f"pair {self.pair_id!r} ({self.role}): positive logprob {value}")

    def pll(self) -> float:
        return sum(self.logprobs)


def pll_pair_decision(good: SentenceScore, bad: SentenceScore) -> bool:
    """True iff the grammatical sentence gets the higher pseudo-log-likelihood.

    The score is the unnormalized sum over token positions; ties count as
    incorrect.
    """
    if good.pair_id != bad.pair_id:
        raise ValueError(f"mismatched pair ids: {good.pair_id!r} vs {bad.pair_id!r}")
    if good.role != "good" or bad.role != "bad":
        raise ValueError("scores passed in the wrong roles")
    for score in (good, bad):
        if any(math.isnan(v) for v in score.logprobs):
            raise DataError(f"pair {score.pair_id!r} ({score.role}): NaN logprob")
    return good.pll() > bad.pll()


def clams_accuracy(
    pairs: Sequence[MinimalPair], scores: Sequence[SentenceScore]
) -> tuple[float, dict[str, float]]:
    """Overall and per-phenomenon minimal-pair accuracy.

    The overall score is the example-weighted mean of per-pair decisions
    (not a mean of phenomenon means).
    """
    if not pairs:
        raise DataError("no minimal pairs given; accuracy is undefined")
    by_key: dict[tuple[str, str], SentenceScore] = {}
    for score in scores:
        key = (score.pair_id, score.role)
        if key in by_key:
            raise DataError(f"duplicate score for pair {score.pair_id!r} role {score.role!r}")
        by_key[key] = score

    decisions: list[bool] = []
    per_phenomenon: dict[str, list[bool]] = {}
    for pair in pairs:
        good = by_key.get((pair.pair_id, "good"))
        bad = by_key.get((pair.pair_id, "bad"))
        if good is None or bad is None:
            raise DataError(f"missing score for pair {pair.pair_id!r}")
        correct = pll_pair_decision(good, bad)
        decisions.append(correct)
        per_phenomenon.setdefault(pair.phenomenon, []).append(correct)

    overall = sum(decisions) / len(decisions)
    breakdown = {ph: sum(d) / len(d) for ph, d in sorted(per_phenomenon.items())}
    return overall, breakdown


@dataclass(frozen=True)
class EvalResult:
    """One (task, setup, seed) metric observation, reported on the 0-100 scale."""

    task: str
    setup: str
    pretrain_corpus: str
    test_language: str
    seed: int | tuple[int, ...]
    metric: str
    value: float
    per_example: tuple[tuple[str, float], ...] | None = None
    per_phenomenon: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.setup not in SETUPS:
            raise ValueError(f"unknown setup {self.setup!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not 0.0 <= self.value <= 100.0:
            raise ValueError(f"value {self.value} outside [0, 100]")
        if self.per_example:
            mean = sum(v for _, v in self.per_example) / len(self.per_example)
            if abs(mean * 100.0 - self.value) > 1e-6:
                raise ValueError(
                    f"per-example mean {mean * 100.0} disagrees with value {self.value}"
                )

    @classmethod
    def from_per_example(
        cls,
        task: str,
        setup: str,
        pretrain_corpus: str,
        test_language: str,
        seed: int,
        metric: str,
        per_example: Sequence[tuple[str, float]],
        per_phenomenon: Mapping[str, float] | None = None,
    ) -> "EvalResult":
        if not per_example:
            raise ValueError("per_example must be non-empty")
        value = 100.0 * sum(v for _, v in per_example) / len(per_example)
        return cls(
            task, setup, pretrain_corpus, test_language, seed, metric,
            value, tuple(per_example), per_phenomenon,
        )

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "setup": self.setup,
            "pretrain_corpus": self.pretrain_corpus,
            "test_language": self.test_language,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "metric": self.metric,
            "value": self.value,
            "per_example": [[i, v] for i, v in self.per_example] if self.per_example else None,
            "per_phenomenon": dict(self.per_phenomenon) if self.per_phenomenon else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalResult":
        seed = data["seed"]
        per_example = data.get("per_example")
        return cls(
            task=data["task"],
            setup=data["setup"],
            pretrain_corpus=data["pretrain_corpus"],
            test_language=data["test_language"],
            seed=tuple(seed) if isinstance(seed, list) else int(seed),
            metric=data["metric"],
            value=float(data["value"]),
            per_example=tuple((i, float(v)) for i, v in per_example) if per_example else None,
            per_phenomenon=data.get("per_phenomenon"),
        )


def aggregate_seeds(results: Sequence[EvalResult]) -> EvalResult:
    """Average one configuration's results over seeds.

    The aggregate value is the arithmetic mean; per-example scores are
    concatenated with ids tagged ``"<seed>:<id>"`` so paired bootstrap can
    resample within seeds.  A single result passes through unchanged.
    """
    if not results:
        raise ValueError("no results to aggregate")
    if len(results) == 1:
        return results[0]
    head = results[0]
    config = (head.task, head.setup, head.pretrain_corpus, head.test_language, head.metric)
    seeds: list[int] = []
    for result in results:
        if (result.task, result.setup, result.pretrain_corpus, result.test_language, result.metric) != config:
            raise ValueError("results with mixed configurations cannot be aggregated")
        if not isinstance(result.seed, int):
            raise ValueError("aggregate_seeds expects single-seed results")
        seeds.append(result.seed)
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"duplicate seeds in aggregation: {sorted(seeds)}")

    value = sum(r.value for r in results) / len(results)
    per_example = None
    if all(r.per_example for r in results):
        lengths = {len(r.per_example) for r in results}  # type: ignore[arg-type]
        if len(lengths) != 1:
            raise ValueError("per-example lists differ in length across seeds")
        ordered = sorted(results, key=lambda r: r.seed)  # type: ignore[arg-type, return-value]
        per_example = tuple(
            (f"{r.seed}:{example_id}", score) for r in ordered for example_id, score in r.per_example
        )
    return EvalResult(
        head.task, head.setup, head.pretrain_corpus, head.test_language,
        tuple(sorted(seeds)), head.metric, value, per_example,
    )


# --- score/prediction file parsing ------------------------------------------


def parse_sentence_score(row: Mapping) -> SentenceScore:
    return SentenceScore(
        pair_id=str(row["pair_id"]),
        role=row["role"],
        tokens=tuple(row["tokens"]),
        logprobs=tuple(float(v) for v in row["logprobs"]),
        phenomenon=row.get("phenomenon"),
    )


def parse_minimal_pair(row: Mapping) -> MinimalPair:
    return MinimalPair(
        pair_id=str(row["pair_id"]),
        phenomenon=row.get("phenomenon", ""),
        good=row["good"],
        bad=row["bad"],
        language=row.get("language", "en"),
    )


def qa_per_example(
    golds: Mapping[str, Sequence[str]],
    predictions: Mapping[str, str],
    language: str,
    metric: str = "f1",
) -> list[tuple[str, float]]:
    """Per-question scores; questions without a prediction score 0."""
    if metric not in ("f1", "em"):
        raise ValueError(f"unsupported QA metric {metric!r}")
    rows: list[tuple[str, float]] = []
    for example_id in sorted(golds):
        prediction = predictions.get(example_id)
        if prediction is None:
            rows.append((example_id, 0.0))
            continue
        f1, em = qa_f1_em(prediction, golds[example_id], language)
        rows.append((example_id, f1 if metric == "f1" else float(em)))
    return rows


def nli_per_example(
    golds: Mapping[str, str], predictions: Mapping[str, str]
) -> list[tuple[str, float]]:
    rows: list[tuple[str, float]] = []
    for example_id in sorted(golds):
        gold = golds[example_id]
        if gold not in NLI_LABELS:
            raise ValueError(f"unknown gold label {gold!r} for {example_id!r}")
        pred = predictions.get(example_id)
        rows.append((example_id, float(pred == gold)))
    return rows


def clams_per_example(
    pairs: Sequence[MinimalPair], scores: Iterable[SentenceScore]
) -> tuple[list[tuple[str, float]], dict[str, float]]:
    scores = list(scores)
    overall, breakdown = clams_accuracy(pairs, scores)
    by_key = {(s.pair_id, s.role): s for s in scores}
    rows = [
        (pair.pair_id, float(pll_pair_decision(by_key[(pair.pair_id, "good")], by_key[(pair.pair_id, "bad")])))
        for pair in pairs
    ]
    return rows, breakdown
