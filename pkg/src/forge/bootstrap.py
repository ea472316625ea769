"""Paired bootstrap significance testing between two system configurations.

The test is one-sided (H1: side a beats side b).  Example ids are resampled
with replacement within each seed; each iteration's delta is the mean of the
per-seed resampled deltas, and the p-value uses add-one smoothing so it can
never reach zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError

DEFAULT_ITERATIONS = 10_000
ALPHA = 0.05

# Bound per-block index-matrix memory when iterating.
_MAX_BLOCK_CELLS = 20_000_000


@dataclass(frozen=True)
class PairedSample:
    """Scores of two systems on the same example under the same seed."""

    example_id: str
    score_a: float
    score_b: float
    seed: int = 0


@dataclass(frozen=True)
class BootstrapReport:
    n_examples: int
    n_seeds: int
    iterations: int
    observed_delta: float
    p_value: float
    significant: bool
    rng_seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.p_value <= 1.0:
            raise ValueError(f"p_value {self.p_value} outside (0, 1]")
        if self.significant != (self.p_value < ALPHA and self.observed_delta > 0):
            raise ValueError("significant flag disagrees with p_value/observed_delta")

    def to_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "n_seeds": self.n_seeds,
            "iterations": self.iterations,
            "observed_delta": self.observed_delta,
            "p_value": self.p_value,
            "significant": self.significant,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BootstrapReport":
        return cls(
            n_examples=int(data["n_examples"]),
            n_seeds=int(data["n_seeds"]),
            iterations=int(data["iterations"]),
            observed_delta=float(data["observed_delta"]),
            p_value=float(data["p_value"]),
            significant=bool(data["significant"]),
            rng_seed=int(data["rng_seed"]),
        )


def paired_bootstrap(
    samples: Sequence[PairedSample],
    iterations: int = DEFAULT_ITERATIONS,
    rng_seed: int = 0,
) -> BootstrapReport:
    """One-sided paired bootstrap test of mean(a) > mean(b).

    The report is a pure function of (samples as a set, iterations,
    rng_seed): samples are sorted internally and each seed group draws its
    randomness from (rng_seed, group index), so input order and scheduling
    cannot change the outcome.
    """
    if len(samples) < 2:
        raise ValueError("paired bootstrap needs at least 2 samples")
    if iterations < 1:
        raise ValueError("iterations must be positive")
    keys = [(s.seed, s.example_id) for s in samples]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (seed, example_id) pairs; samples are not a paired set")

    ordered = sorted(samples, key=lambda s: (s.seed, s.example_id))
    groups: dict[int, list[PairedSample]] = {}
    for sample in ordered:
        groups.setdefault(sample.seed, []).append(sample)

    observed_delta = float(
        np.mean([s.score_a for s in ordered]) - np.mean([s.score_b for s in ordered])
    )

    deltas = np.zeros(iterations)
    for group_index, seed in enumerate(sorted(groups)):
        diffs = np.array([s.score_a - s.score_b for s in groups[seed]])
        n = len(diffs)
        rng = np.random.default_rng([rng_seed, group_index])
        block = max(1, min(iterations, _MAX_BLOCK_CELLS // max(1, n)))
        start = 0
        while start < iterations:
            stop = min(start + block, iterations)
            idx = rng.integers(0, n, size=(stop - start, n))
            deltas[start:stop] += diffs[idx].mean(axis=1)
            start = stop
    deltas /= len(groups)

    p_value = float(1 + int(np.sum(deltas <= 0.0))) / (iterations + 1)
    return BootstrapReport(
        n_examples=len(samples),
        n_seeds=len(groups),
        iterations=iterations,
        observed_delta=observed_delta,
        p_value=p_value,
        significant=p_value < ALPHA and observed_delta > 0,
        rng_seed=rng_seed,
    )


def mark_significance(report: BootstrapReport, alpha: float = ALPHA) -> bool:
    """Star a comparison only for significant improvements (strict p < alpha)."""
    return report.p_value < alpha and report.observed_delta > 0


def paired_samples_from_results(
    result_a, result_b, pairing: Mapping[str, str] | None = None
) -> list[PairedSample]:
    """Pair two results' per-example scores by (seed, example id).

    Aggregated results carry seed-tagged ids ("<seed>:<id>"); single-seed
    results use their own seed field.  Scores are lifted to the 0-100
    reporting scale so deltas read like table values.  ``pairing``
    optionally maps a-side ids to b-side ids when the two sides name
    examples differently.
    """

    def explode(result) -> dict[tuple[int, str], float]:
        if not result.per_example:
            raise DataError("result has no per-example scores; bootstrap needs them")
        out: dict[tuple[int, str], float] = {}
        aggregated = isinstance(result.seed, tuple)
        for example_id, score in result.per_example:
            if aggregated:
                seed_text, _, bare = example_id.partition(":")
                out[(int(seed_text), bare)] = 100.0 * score
            else:
                out[(result.seed, example_id)] = 100.0 * score
        return out

    side_a = explode(result_a)
    side_b = explode(result_b)
    samples = []
    missing = []
    for (seed, example_id), score_a in sorted(side_a.items()):
        b_id = pairing.get(example_id, example_id) if pairing else example_id
        score_b = side_b.get((seed, b_id))
        if score_b is None:
            missing.append(f"{seed}:{b_id}")
            continue
        samples.append(PairedSample(example_id, score_a, score_b, seed))
    if missing:
        raise DataError(
            f"{len(missing)} examples missing from side b (first: {missing[:3]})"
        )
    if len(samples) != len(side_b):
        raise DataError("side b contains examples absent from side a")
    return samples
