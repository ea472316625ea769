"""Translation-based QA dataset construction.

Source QA examples are machine-translated, answer spans are re-located in
the translated context with string similarity, and examples whose
round-trip translation drifts too far from the original (embedding cosine
below the filter threshold) are discarded.  With the offline providers the
whole pipeline is deterministic.
"""

from __future__ import annotations

import json
import warnings as _warnings
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

from .errors import PartialRunError, TransportError
from .providers import Embedder, ProviderConfig, cosine_similarity
from .similarity import DEFAULT_ALIGN_THRESHOLD, realign_span

DEFAULT_FILTER_THRESHOLD = 0.75
DEFAULT_SPLIT_RATIOS = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class Answer:
    text: str
    char_start: int


@dataclass(frozen=True)
class QAExample:
    """A context/question pair with character-addressed answer spans."""

    id: str
    context: str
    question: str
    answers: tuple[Answer, ...]
    language: str

    def __post_init__(self) -> None:
        for answer in self.answers:
            end = answer.char_start + len(answer.text)
            if self.context[answer.char_start : end] != answer.text:
                raise ValueError(
                    f"example {self.id!r}: answer {answer.text!r} is not the context "
                    f"substring at offset {answer.char_start}"
                )


@dataclass(frozen=True)
class AlignmentReport:
    """Outcome of realigning one answer span (``answer_index`` within its example)."""

    example_id: str
    status: str  # exact | fuzzy_accepted | rejected
    score: float
    window: tuple[int, int] | None
    answer_index: int = 0

    def __post_init__(self) -> None:
        if self.status not in ("exact", "fuzzy_accepted", "rejected"):
            raise ValueError(f"unknown alignment status {self.status!r}")
        if self.status == "rejected" and self.window is not None:
            raise ValueError("rejected alignments must not record a window")

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "status": self.status,
            "score": self.score,
            "window": list(self.window) if self.window else None,
            "answer_index": self.answer_index,
        }


@dataclass(frozen=True)
class FilterDecision:
    example_id: str
    similarity: float
    kept: bool

    def to_dict(self) -> dict:
        return {"example_id": self.example_id, "similarity": self.similarity, "kept": self.kept}


def back_translation_filter(
    original: str,
    round_trip: str,
    embedder: Embedder,
    example_id: str = "",
    threshold: float = DEFAULT_FILTER_THRESHOLD,
) -> FilterDecision:
    """Keep an example iff cosine(embed(original), embed(round_trip)) >= threshold.

    The threshold itself is kept: only strictly-lower similarities are
    discarded.
    """
    try:
        vec_original, vec_round_trip = embedder.embed([original, round_trip])
    except TransportError as exc:
        raise TransportError(str(exc), example_ids=(example_id,)) from exc
    similarity = cosine_similarity(vec_original, vec_round_trip)
    return FilterDecision(example_id, similarity, kept=similarity >= threshold)


def _lower_preserving_length(text: str) -> str:
    # Per-character lowering; characters whose lowercase expands (e.g. ß) are
    # kept as-is so offsets computed on the lowered copy stay valid.
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in text)


@dataclass
class TranspositionResult:
    examples: list[QAExample]
    alignment_reports: list[AlignmentReport]
    filter_decisions: list[FilterDecision]

    def counts(self) -> dict[str, int]:
        rejected_align = {r.example_id for r in self.alignment_reports if r.status == "rejected"}
        rejected_filter = {d.example_id for d in self.filter_decisions if not d.kept}
        return {
            "emitted": len(self.examples),
            "alignment_rejected": len(rejected_align),
            "filter_rejected": len(rejected_filter),
        }


def build_translated_dataset(
    src: Sequence[QAExample],
    cfg: ProviderConfig,
    target_language: str,
    align_threshold: float = DEFAULT_ALIGN_THRESHOLD,
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD,
    start_cursor: int = 0,
) -> TranspositionResult:
    """Translate, realign, and filter a QA dataset.

    Examples are processed in id order.  An example survives alignment only
    if every answer realigns; it then survives the back-translation filter
    if its context round-trip stays similar enough to the original.  Every
    input lands in exactly one of {emitted, alignment-rejected,
    filter-rejected}.  A translation outage raises ``PartialRunError``
    carrying the index to resume from.
    """
    ordered = sorted(src, key=lambda e: e.id)
    examples: list[QAExample] = []
    reports: list[AlignmentReport] = []
    decisions: list[FilterDecision] = []

    for position in range(start_cursor, len(ordered)):
        example = ordered[position]
        texts = [example.context, example.question, *(a.text for a in example.answers)]
        try:
            translated = cfg.translator.translate(texts)
            round_trip = cfg.translator.back_translate([translated[0]])[0]
        except TransportError as exc:
            raise PartialRunError(
                f"translation provider failed at example {example.id!r}: {exc}",
                cursor=position,
                partial=TranspositionResult(examples, reports, decisions),
            ) from exc

        context_t, question_t = translated[0], translated[1]
        answers_t = translated[2:]

        context_match = _lower_preserving_length(context_t)
        aligned: list[Answer] = []
        example_rejected = False
        for answer_index, answer_text in enumerate(answers_t):
            if not answer_text or not context_t:
                match = None
            else:
                match = realign_span(
                    _lower_preserving_length(answer_text), context_match, align_threshold
                )
            if match is None:
                reports.append(AlignmentReport(example.id, "rejected", 0.0, None, answer_index))
                example_rejected = True
                continue
            status = "exact" if match.exact else "fuzzy_accepted"
            reports.append(
                AlignmentReport(example.id, status, match.score, (match.start, match.end), answer_index)
            )
            aligned.append(Answer(context_t[match.start : match.end], match.start))
        if example_rejected:
            continue

        try:
            decision = back_translation_filter(
                example.context, round_trip, cfg.embedder, example.id, filter_threshold
            )
        except TransportError as exc:
            # Embedding failures skip the example rather than aborting the run.
            _warnings.warn(f"embedding provider failed for {example.id!r}: {exc}")
            decisions.append(FilterDecision(example.id, -1.0, kept=False))
            continue
        decisions.append(decision)
        if not decision.kept:
            continue

        examples.append(
            QAExample(example.id, context_t, question_t, tuple(aligned), target_language)
        )

    return TranspositionResult(examples, reports, decisions)


def split_dataset(
    examples: Sequence[QAExample],
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> tuple[list[QAExample], list[QAExample], list[QAExample]]:
    """Disjoint, exhaustive, seed-deterministic train/dev/test partition.

    Dev and test sizes are floor-based; the remainder goes to train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios sum to {sum(ratios)}, expected 1.0")
    if any(r < 0 for r in ratios):
        raise ValueError("split ratios must be non-negative")
    if len(examples) < 3 and all(r > 0 for r in ratios):
        _warnings.warn(f"degenerate split: only {len(examples)} examples for three non-empty parts")
    shuffled = sorted(examples, key=lambda e: e.id)
    Random(seed).shuffle(shuffled)
    n = len(shuffled)
    n_dev = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_dev - n_test
    train = shuffled[:n_train]
    dev = shuffled[n_train : n_train + n_dev]
    test = shuffled[n_train + n_dev :]
    return train, dev, test


# --- SQuAD v1.1 JSON interchange -------------------------------------------


def read_squad(path: str | Path, language: str = "en") -> list[QAExample]:
    """Flatten a SQuAD-v1.1-shaped JSON file into QA examples."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    examples: list[QAExample] = []
    for article in data["data"]:
        for paragraph in article["paragraphs"]:
            context = paragraph["context"]
            for qa in paragraph["qas"]:
                answers = tuple(
                    Answer(ans["text"], int(ans["answer_start"])) for ans in qa["answers"]
                )
                examples.append(QAExample(qa["id"], context, qa["question"], answers, language))
    return examples


def write_squad(path: str | Path, examples: Sequence[QAExample], title: str = "dataset") -> None:
    """Write examples in the SQuAD v1.1 shape, grouping shared contexts."""
    paragraphs: list[dict] = []
    index: dict[str, int] = {}
    for example in examples:
        if example.context not in index:
            index[example.context] = len(paragraphs)
            paragraphs.append({"context": example.context, "qas": []})
        paragraphs[index[example.context]]["qas"].append(
            {
                "id": example.id,
                "question": example.question,
                "answers": [{"text": a.text, "answer_start": a.char_start} for a in example.answers],
            }
        )
    payload = {"version": "1.1", "data": [{"title": title, "paragraphs": paragraphs}]}
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def write_jsonl(path: str | Path, rows: Sequence[Mapping]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
