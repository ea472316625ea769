"""Deterministic, size-matched pretraining corpus construction.

Raw documents are normalized, segmented into sentences, and sampled
domain-by-domain under word quotas.  Sampling never splits a sentence and
never exceeds a quota: a sentence that would overshoot is skipped and the
domain's accumulation stops, so realized totals land slightly under budget.
Every step is a pure function of (inputs, spec, seed), which makes corpus
digests reproducible bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Iterable, Mapping, Sequence

from .errors import DataError, MissingDomainError

LANGUAGES = ("en", "fr")

DOMAINS = (
    "cds",
    "dialogue",
    "children_books",
    "gutenberg",
    "open_subtitles",
    "qed",
    "wikipedia",
    "vikidia",
)

# Domain shares of the 10M-word multi-domain mixture.
MULTIDOMAIN_PROPORTIONS = {
    "cds": 0.05,
    "dialogue": 0.09,
    "children_books": 0.09,
    "gutenberg": 0.10,
    "open_subtitles": 0.31,
    "qed": 0.11,
    "wikipedia": 0.10,
    "vikidia": 0.15,
}

_TERMINATORS = (".", "!", "?", "…")

# Tokens that end with a period but do not end a sentence.  Text is
# lowercased before segmentation, so the lists are lowercase.
_ABBREVIATIONS = {
    "en": frozenset({"mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "sr.", "jr.", "vs.", "e.g.", "i.e."}),
    "fr": frozenset({"m.", "mm.", "mme.", "mlle.", "dr.", "st.", "ste.", "cf."}),
}


@dataclass(frozen=True)
class RawDocument:
    """A single source document with its domain and language labels."""

    source_id: str
    domain: str
    language: str
    text: str

    def __post_init__(self) -> None:
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.language not in LANGUAGES:
            raise ValueError(f"unknown language {self.language!r}")
        if not self.text:
            raise ValueError(f"document {self.source_id!r} is empty after normalization")

    @classmethod
    def from_raw(cls, source_id: str, domain: str, language: str, raw_text: str) -> "RawDocument":
        """Normalize ``raw_text`` and build the document."""
        return cls(source_id, domain, language, normalize_text(raw_text))


@dataclass(frozen=True)
class SentenceRecord:
    """One normalized sentence; the atomic sampling unit.

    ``language`` and ``domain`` are stamped during segmentation/sampling so
    bilingual manifests can attribute every emitted sentence.
    """

    doc_id: str
    index: int
    text: str
    word_count: int
    language: str | None = None
    domain: str | None = None

    def __post_init__(self) -> None:
        if "\n" in self.text:
            raise ValueError("sentence text must not contain newlines")
        if self.word_count != len(self.text.split()):
            raise ValueError(f"word_count {self.word_count} does not match text {self.text!r}")
        if self.word_count <= 0:
            raise ValueError("sentences must contain at least one word")


@dataclass(frozen=True)
class OrderPolicy:
    """Emission-order policy: a global seeded shuffle, or labeled blocks.

    Block groups are matched against a sentence's domain or language; a
    sentence falls into the first group that names either, remaining
    sentences keep their position after all groups.
    """

    kind: str = "shuffled"
    blocks: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("shuffled", "block_ordered"):
            raise ValueError(f"unknown order policy {self.kind!r}")
        if self.kind == "block_ordered" and not self.blocks:
            raise ValueError("block_ordered policy requires at least one group")

    @property
    def label(self) -> str:
        if self.kind == "shuffled":
            return "shuffled"
        return "block_ordered:" + "|".join("+".join(g) for g in self.blocks)

    def to_dict(self) -> dict:
        if self.kind == "shuffled":
            return {"kind": "shuffled"}
        return {"kind": "block_ordered", "blocks": [list(g) for g in self.blocks]}

    @classmethod
    def from_dict(cls, data) -> "OrderPolicy":
        if isinstance(data, str):
            return cls(kind=data)
        if data.get("kind") == "block_ordered":
            return cls("block_ordered", tuple(tuple(g) for g in data["blocks"]))
        return cls("shuffled")


@dataclass(frozen=True)
class CorpusSpec:
    """Target composition of a corpus build."""

    total_budget_words: int
    language_mix: tuple[tuple[str, float], ...]
    domain_quotas: tuple[tuple[str, float], ...]
    seed: int
    order_policy: OrderPolicy = field(default_factory=OrderPolicy)

    def __post_init__(self) -> None:
        # A zero budget is tolerated as the degenerate empty corpus.
        if self.total_budget_words < 0:
            raise ValueError("budget must be non-negative")
        for name, pairs in ("language_mix", self.language_mix), ("domain_quotas", self.domain_quotas):
            total = sum(f for _, f in pairs)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{name} fractions sum to {total}, expected 1.0")
            keys = [k for k, _ in pairs]
            if len(set(keys)) != len(keys):
                raise ValueError(f"duplicate keys in {name}")
            if any(f < 0 for _, f in pairs):
                raise ValueError(f"negative fraction in {name}")
        for lang, _ in self.language_mix:
            if lang not in LANGUAGES:
                raise ValueError(f"unknown language {lang!r}")
        for dom, _ in self.domain_quotas:
            if dom not in DOMAINS:
                raise ValueError(f"unknown domain {dom!r}")

    def to_dict(self) -> dict:
        return {
            "total_budget_words": self.total_budget_words,
            "language_mix": [[l, f] for l, f in self.language_mix],
            "domain_quotas": [[d, p] for d, p in self.domain_quotas],
            "seed": self.seed,
            "order_policy": self.order_policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping, seed: int | None = None) -> "CorpusSpec":
        mix = data["language_mix"]
        quotas = data["domain_quotas"]
        as_pairs = lambda m: tuple((k, float(v)) for k, v in (m.items() if isinstance(m, Mapping) else m))
        return cls(
            total_budget_words=int(data["total_budget_words"]),
            language_mix=as_pairs(mix),
            domain_quotas=as_pairs(quotas),
            seed=int(seed if seed is not None else data["seed"]),
            order_policy=OrderPolicy.from_dict(data.get("order_policy", "shuffled")),
        )


@dataclass(frozen=True)
class ManifestCell:
    language: str
    domain: str
    realized_words: int
    realized_sentences: int


@dataclass(frozen=True)
class CorpusManifest:
    """Audited composition of a built corpus."""

    cells: tuple[ManifestCell, ...]
    total_words: int
    total_sentences: int
    content_digest: str
    spec_echo: CorpusSpec
    order_label: str
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.total_words > self.spec_echo.total_budget_words:
            raise DataError(
                f"total_words {self.total_words} exceeds budget {self.spec_echo.total_budget_words}"
            )
        if self.total_words != sum(c.realized_words for c in self.cells):
            raise DataError("total_words does not equal the sum of per-cell realized words")

    def to_dict(self) -> dict:
        return {
            "cells": [
                {
                    "language": c.language,
                    "domain": c.domain,
                    "realized_words": c.realized_words,
                    "realized_sentences": c.realized_sentences,
                }
                for c in self.cells
            ],
            "total_words": self.total_words,
            "total_sentences": self.total_sentences,
            "content_digest": self.content_digest,
            "spec_echo": self.spec_echo.to_dict(),
            "order_label": self.order_label,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CorpusManifest":
        return cls(
            cells=tuple(
                ManifestCell(c["language"], c["domain"], int(c["realized_words"]), int(c["realized_sentences"]))
                for c in data["cells"]
            ),
            total_words=int(data["total_words"]),
            total_sentences=int(data["total_sentences"]),
            content_digest=data["content_digest"],
            spec_echo=CorpusSpec.from_dict(data["spec_echo"]),
            order_label=data["order_label"],
            warnings=tuple(data.get("warnings", ())),
        )


def normalize_text(raw: str) -> str:
    """NFKC-normalize, lowercase, and collapse whitespace runs to single spaces."""
    text = unicodedata.normalize("NFKC", raw).lower()
    return " ".join(text.split())


def segment_sentences(doc: RawDocument) -> list[SentenceRecord]:
    """Split a normalized document into sentence records.

    A boundary is placed after a token ending in ``. ! ? …`` unless the
    token is a known abbreviation for the document's language.  Text with
    no terminator yields a single sentence.
    """
    abbrevs = _ABBREVIATIONS.get(doc.language, frozenset())
    records: list[SentenceRecord] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            text = " ".join(current)
            records.append(
                SentenceRecord(
                    doc_id=doc.source_id,
                    index=len(records),
                    text=text,
                    word_count=len(current),
                    language=doc.language,
                    domain=doc.domain,
                )
            )
            current.clear()

    for token in doc.text.split():
        current.append(token)
        if token.endswith(_TERMINATORS) and token not in abbrevs:
            flush()
    flush()
    return records


def _derive_rng(seed: int, *parts: object) -> Random:
    """Stable RNG derivation; never uses builtin str hashing (it is salted)."""
    material = ":".join([str(seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return Random(int.from_bytes(digest[:8], "big"))


def _greedy_fill(ordered: Sequence[SentenceRecord], quota: int) -> tuple[list[SentenceRecord], int]:
    """Accumulate sentences until one would exceed ``quota``, then stop."""
    taken: list[SentenceRecord] = []
    used = 0
    for rec in ordered:
        if used + rec.word_count > quota:
            break
        taken.append(rec)
        used += rec.word_count
    return taken, used


def corpus_bytes(records: Iterable[SentenceRecord]) -> bytes:
    """Corpus file content: one sentence per line, UTF-8, LF endings."""
    return "".join(r.text + "\n" for r in records).encode("utf-8")


def content_digest(records: Iterable[SentenceRecord]) -> str:
    return hashlib.sha256(corpus_bytes(records)).hexdigest()


def _apply_order(records: list[SentenceRecord], spec: CorpusSpec, salt: str) -> list[SentenceRecord]:
    policy = spec.order_policy
    if policy.kind == "shuffled":
        ordered = list(records)
        _derive_rng(spec.seed, "order", salt).shuffle(ordered)
        return ordered
    remaining = list(records)
    ordered = []
    for group in policy.blocks:
        members = [r for r in remaining if r.domain in group or r.language in group]
        ordered.extend(members)
        remaining = [r for r in remaining if not (r.domain in group or r.language in group)]
    ordered.extend(remaining)
    return ordered


def build_manifest(
    records: Sequence[SentenceRecord],
    spec: CorpusSpec,
    order_label: str | None = None,
    warnings: Sequence[str] = (),
) -> CorpusManifest:
    """Summarize ``records`` into per-(language, domain) cells and a digest."""
    grouped: dict[tuple[str, str], list[int]] = {}
    for rec in records:
        key = (rec.language or "?", rec.domain or "?")
        cell = grouped.setdefault(key, [0, 0])
        cell[0] += rec.word_count
        cell[1] += 1
    cells = tuple(
        ManifestCell(lang, dom, words, sents)
        for (lang, dom), (words, sents) in sorted(grouped.items())
    )
    return CorpusManifest(
        cells=cells,
        total_words=sum(c.realized_words for c in cells),
        total_sentences=len(records),
        content_digest=content_digest(records),
        spec_echo=spec,
        order_label=order_label if order_label is not None else spec.order_policy.label,
        warnings=tuple(warnings),
    )


def sample_corpus(
    spec: CorpusSpec,
    pools: Mapping[str, Sequence[SentenceRecord]],
    max_workers: int | None = None,
) -> tuple[list[SentenceRecord], CorpusManifest]:
    """Sample a single-language corpus honoring the spec's domain quotas.

    Each domain's pool is shuffled with an RNG derived from
    (seed, language, domain) and filled greedily.  Domains may be sampled
    in parallel; the final order is a seeded merge, so the digest is
    independent of ``max_workers``.
    """
    active = [(lang, f) for lang, f in spec.language_mix if f > 0]
    if len(active) != 1 or abs(active[0][1] - 1.0) > 1e-9:
        raise ValueError("sample_corpus requires a single-language spec; use mix_bilingual for mixes")
    language = active[0][0]

    quotas: dict[str, int] = {}
    for domain, proportion in spec.domain_quotas:
        if proportion <= 0:
            continue
        if not pools.get(domain):
            raise MissingDomainError(f"no sentences available for quota'd domain {domain!r}")
        quotas[domain] = int(proportion * spec.total_budget_words)

    def fill(domain: str) -> tuple[str, list[SentenceRecord], int]:
        pool = [
            SentenceRecord(r.doc_id, r.index, r.text, r.word_count, language, domain)
            for r in pools[domain]
        ]
        rng = _derive_rng(spec.seed, "sample", language, domain)
        rng.shuffle(pool)
        taken, used = _greedy_fill(pool, quotas[domain])
        return domain, taken, used

    domains = list(quotas)
    if max_workers and max_workers > 1 and len(domains) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = {d: (t, u) for d, t, u in pool.map(fill, domains)}
    else:
        results = {d: (t, u) for d, t, u in map(fill, domains)}

    warnings = []
    combined: list[SentenceRecord] = []
    for domain, _ in spec.domain_quotas:
        if domain not in results:
            continue
        taken, used = results[domain]
        combined.extend(taken)
        if used < int(0.98 * quotas[domain]):
            warnings.append(f"underfill: domain {domain} realized {used} of {quotas[domain]} quota words")

    ordered = _apply_order(combined, spec, language)
    return ordered, build_manifest(ordered, spec, warnings=warnings)


def mix_bilingual(
    corpus_en: Sequence[SentenceRecord],
    corpus_fr: Sequence[SentenceRecord],
    spec: CorpusSpec,
) -> tuple[list[SentenceRecord], CorpusManifest]:
    """Combine per-language corpora into a balanced bilingual corpus.

    Each language is trimmed greedily to ``fraction * budget`` words in its
    existing (already seed-deterministic) order, then the union is ordered
    per the spec's order policy.
    """
    fractions = dict(spec.language_mix)
    sources = {"en": list(corpus_en), "fr": list(corpus_fr)}
    trimmed: dict[str, list[SentenceRecord]] = {}
    for lang, fraction in fractions.items():
        if fraction <= 0:
            trimmed[lang] = []
            continue
        if not sources.get(lang):
            raise ValueError(f"language {lang!r} has fraction {fraction} but an empty corpus")
        target = int(fraction * spec.total_budget_words)
        trimmed[lang], _ = _greedy_fill(sources[lang], target)

    nonempty = [lang for lang in sources if trimmed.get(lang)]
    combined = [rec for lang in ("en", "fr") for rec in trimmed.get(lang, [])]
    if len(nonempty) <= 1:
        # Degenerate mix: a single contributing language passes through untouched.
        ordered = combined
    else:
        ordered = _apply_order(combined, spec, "bilingual")
    return ordered, build_manifest(ordered, spec)


def concat_ordered(
    first: Sequence[SentenceRecord], second: Sequence[SentenceRecord]
) -> list[SentenceRecord]:
    """First followed by second, with no reshuffling across the boundary."""
    return list(first) + list(second)


def downsample(
    corpus: Sequence[SentenceRecord], target_words: int, seed: int
) -> list[SentenceRecord]:
    """Seed-deterministic sentence-level subsample with greedy fill semantics."""
    if target_words < 0:
        raise ValueError("target must be non-negative")
    total = sum(r.word_count for r in corpus)
    if target_words > total:
        raise ValueError(f"target {target_words} exceeds corpus total {total}")
    ordered = list(corpus)
    _derive_rng(seed, "downsample").shuffle(ordered)
    taken, _ = _greedy_fill(ordered, target_words)
    return taken


def read_sources(sources_dir: str | Path) -> dict[str, dict[str, list[SentenceRecord]]]:
    """Load a source directory into per-language, per-domain sentence pools.

    Expects UTF-8 ``.txt`` files plus ``sources.json`` mapping each file
    name to ``{"domain": ..., "language": ...}``.
    """
    sources_dir = Path(sources_dir)
    sidecar = sources_dir / "sources.json"
    mapping = json.loads(sidecar.read_text(encoding="utf-8"))
    pools: dict[str, dict[str, list[SentenceRecord]]] = {}
    for filename in sorted(mapping):
        meta = mapping[filename]
        raw = (sources_dir / filename).read_text(encoding="utf-8")
        normalized = normalize_text(raw)
        if not normalized:
            continue
        doc = RawDocument(filename, meta["domain"], meta["language"], normalized)
        bucket = pools.setdefault(doc.language, {}).setdefault(doc.domain, [])
        bucket.extend(segment_sentences(doc))
    return pools


def write_corpus(
    out_dir: str | Path, records: Sequence[SentenceRecord], manifest: CorpusManifest
) -> tuple[Path, Path]:
    """Emit ``corpus.txt`` and ``manifest.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = out_dir / "corpus.txt"
    corpus_path.write_bytes(corpus_bytes(records))
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
    return corpus_path, manifest_path
