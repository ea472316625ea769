"""String similarity metrics and answer-span realignment.

Translated answer spans rarely survive translation verbatim, so spans are
re-located in the translated context: exact substring match first, then a
fuzzy search over word-boundary-aligned windows scored by the mean of
normalized Levenshtein similarity and Jaro-Winkler similarity.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_ALIGN_THRESHOLD = 0.80

_JW_PREFIX_SCALE = 0.1
_JW_MAX_PREFIX = 4
_JW_BOOST_THRESHOLD = 0.7  # prefix boost only applies to already-similar strings


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits transforming ``a`` into ``b``."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    # Two-row DP over the shorter string to bound memory.
    if len(b) > len(a):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,  # deletion
                current[j - 1] + 1,  # insertion
                previous[j - 1] + (ca != cb),  # substitution
            )
        previous = current
    return previous[-1]


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - distance/max_len, in [0, 1]; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def _jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    matched_a = [False] * la
    matched_b = [False] * lb
    matches = 0
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb - 1, i + window)
        for j in range(lo, hi + 1):
            if not matched_b[j] and b[j] == ch:
                matched_a[i] = matched_b[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    b_matches = [b[j] for j in range(lb) if matched_b[j]]
    transpositions = 0
    k = 0
    for i in range(la):
        if matched_a[i]:
            if a[i] != b_matches[k]:
                transpositions += 1
            k += 1
    transpositions //= 2
    return (matches / la + matches / lb + (matches - transpositions) / matches) / 3.0


def jaro_winkler(a: str, b: str) -> float:
    """Jaro similarity with the Winkler common-prefix boost (p=0.1, max 4)."""
    score = _jaro(a, b)
    if score <= _JW_BOOST_THRESHOLD:
        return score
    prefix = 0
    for ca, cb in zip(a[:_JW_MAX_PREFIX], b[:_JW_MAX_PREFIX]):
        if ca != cb:
            break
        prefix += 1
    return score + prefix * _JW_PREFIX_SCALE * (1.0 - score)


def combined_similarity(a: str, b: str) -> float:
    """Arithmetic mean of normalized Levenshtein and Jaro-Winkler similarity."""
    return 0.5 * (levenshtein_similarity(a, b) + jaro_winkler(a, b))


@dataclass(frozen=True)
class SpanMatch:
    start: int
    end: int
    score: float
    exact: bool


def realign_span(
    answer: str, context: str, align_threshold: float = DEFAULT_ALIGN_THRESHOLD
) -> SpanMatch | None:
    """Locate ``answer`` inside ``context``; None when no window clears the threshold.

    Exact substring matches win at the leftmost occurrence with score 1.0.
    Otherwise candidate windows are word-boundary aligned with a word count
    within +/-2 of the answer's, scored by ``combined_similarity``; the best
    window is returned if it reaches ``align_threshold``, ties broken by
    the earliest start.  Both strings are expected to be normalized the
    same way by the caller (casefold only; punctuation kept).
    """
    if not answer or not context:
        raise ValueError("answer and context must be non-empty")

    found = context.find(answer)
    if found >= 0:
        return SpanMatch(found, found + len(answer), 1.0, exact=True)

    # Word start/end character offsets for window enumeration.
    offsets: list[tuple[int, int]] = []
    pos = 0
    for word in context.split():
        start = context.index(word, pos)
        offsets.append((start, start + len(word)))
        pos = start + len(word)

    answer_words = len(answer.split())
    min_words = max(1, answer_words - 2)
    max_words = answer_words + 2

    best: SpanMatch | None = None
    for i in range(len(offsets)):
        for width in range(min_words, max_words + 1):
            j = i + width - 1
            if j >= len(offsets):
                break
            window = context[offsets[i][0] : offsets[j][1]]
            score = combined_similarity(answer, window)
            if best is None or score > best.score:
                best = SpanMatch(offsets[i][0], offsets[j][1], score, exact=False)
    if best is not None and best.score >= align_threshold:
        return best
    return None
