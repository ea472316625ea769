"""Experiment planning over the mono/bi/cross matrix, a persistent run
registry, and interchange-file validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import CorpusManifest
from .errors import DataError, ValidationError
from .evaluation import EvalResult, NLI_LABELS, SETUPS, TASKS

LANGUAGES = ("en", "fr")
DEFAULT_SEEDS = (1, 2, 3)

INTERCHANGE_KINDS = ("pll", "qa_pred", "nli_pred", "corpus_manifest", "result")


def derive_setup(pretrain_languages: Sequence[str], test_language: str) -> str:
    languages = set(pretrain_languages)
    if languages == {test_language}:
        return "monolingual"
    if len(languages) > 1:
        return "bilingual"
    return "cross_lingual"


@dataclass(frozen=True)
class Run:
    """One fully-expanded experiment cell."""

    run_id: str
    setup: str
    pretrain_corpus: str
    pretrain_languages: tuple[str, ...]
    test_language: str
    finetune_language: str
    task: str
    seed: int

    def validate(self) -> None:
        problems = []
        if self.setup not in SETUPS:
            problems.append(f"unknown setup {self.setup!r}")
        if self.task not in TASKS:
            problems.append(f"unknown task {self.task!r}")
        if self.test_language not in LANGUAGES:
            problems.append(f"unknown test language {self.test_language!r}")
        # Fine-tuning always happens in the testing language.
        if self.finetune_language != self.test_language:
            problems.append(
                f"finetune language {self.finetune_language!r} differs from test language"
            )
        languages = set(self.pretrain_languages)
        if not languages:
            problems.append("no pretrain languages")
        if self.setup == "monolingual" and languages != {self.test_language}:
            problems.append("monolingual runs must pretrain exactly on the test language")
        if self.setup == "bilingual" and languages != {"en", "fr"}:
            problems.append("bilingual runs must pretrain on both en and fr")
        if self.setup == "cross_lingual" and self.test_language in languages:
            problems.append("cross-lingual runs must not pretrain on the test language")
        if problems:
            raise ValidationError(
                f"run {self.run_id!r}: " + "; ".join(problems), tuple(problems)
            )


@dataclass(frozen=True)
class ExperimentPlan:
    runs: tuple[Run, ...]

    def __post_init__(self) -> None:
        seen = set()
        for run in self.runs:
            run.validate()
            key = (run.setup, run.pretrain_corpus, run.test_language, run.task, run.seed)
            if key in seen:
                raise ValidationError(f"duplicate run cell {key}")
            seen.add(key)

    def to_dict(self) -> dict:
        return {
            "runs": [
                {
                    "run_id": r.run_id,
                    "setup": r.setup,
                    "pretrain_corpus": r.pretrain_corpus,
                    "pretrain_languages": list(r.pretrain_languages),
                    "test_language": r.test_language,
                    "finetune_language": r.finetune_language,
                    "task": r.task,
                    "seed": r.seed,
                }
                for r in self.runs
            ]
        }


def _run_id(corpus: str, test_language: str, task: str, seed: int) -> str:
    return f"{corpus}__{test_language}__{task}__s{seed}"


def plan_runs(config: Mapping | str | Path) -> ExperimentPlan:
    """Expand an experiment config into the full run matrix.

    The config lists pretraining corpora (label + languages), test
    languages, tasks, and seeds; setups are derived per (corpus, test
    language).  Explicit ``runs`` entries may declare their own setup,
    which is then validated against the language constraints.
    """
    if not isinstance(config, Mapping):
        config = json.loads(Path(config).read_text(encoding="utf-8"))

    runs: list[Run] = []
    corpora = config.get("corpora", [])
    test_languages = config.get("test_languages", [])
    tasks = config.get("tasks", [])
    seeds = [int(s) for s in config.get("seeds", DEFAULT_SEEDS)]
    if corpora and not tasks:
        raise ValidationError("experiment config has corpora but an empty tasks list")
    for corpus in corpora:
        label = corpus["label"]
        languages = tuple(corpus["languages"])
        for test_language in test_languages:
            setup = derive_setup(languages, test_language)
            for task in tasks:
                for seed in seeds:
                    runs.append(
                        Run(
                            run_id=_run_id(label, test_language, task, seed),
                            setup=setup,
                            pretrain_corpus=label,
                            pretrain_languages=languages,
                            test_language=test_language,
                            finetune_language=test_language,
                            task=task,
                            seed=seed,
                        )
                    )

    for entry in config.get("runs", []):
        entry_tasks = entry.get("tasks", tasks)
        entry_seeds = [int(s) for s in entry.get("seeds", seeds or DEFAULT_SEEDS)]
        if not entry_tasks:
            raise ValidationError(f"run {entry.get('run_id', entry.get('pretrain_corpus'))!r}: empty tasks list")
        languages = tuple(entry["pretrain_languages"])
        test_language = entry["test_language"]
        setup = entry.get("setup") or derive_setup(languages, test_language)
        # an explicit run_id only names a single cell
        explicit_id = entry.get("run_id") if len(entry_tasks) == 1 and len(entry_seeds) == 1 else None
        for task in entry_tasks:
            for seed in entry_seeds:
                runs.append(
                    Run(
                        run_id=explicit_id or _run_id(entry["pretrain_corpus"], test_language, task, seed),
                        setup=setup,
                        pretrain_corpus=entry["pretrain_corpus"],
                        pretrain_languages=languages,
                        test_language=test_language,
                        finetune_language=entry.get("finetune_language", test_language),
                        task=task,
                        seed=seed,
                    )
                )

    if not runs:
        raise ValidationError("experiment config produced no runs")
    return ExperimentPlan(tuple(runs))


# --- interchange validation ---------------------------------------------------


def _check_pll_line(row: Mapping, line_no: int, problems: list[str]) -> None:
    for key in ("pair_id", "role", "tokens", "logprobs"):
        if key not in row:
            problems.append(f"line {line_no}: missing field {key!r}")
            return
    if row["role"] not in ("good", "bad"):
        problems.append(f"line {line_no}: bad role {row['role']!r}")
    tokens, logprobs = row["tokens"], row["logprobs"]
    if not isinstance(tokens, list) or not isinstance(logprobs, list):
        problems.append(f"line {line_no}: tokens/logprobs must be lists")
        return
    if len(tokens) != len(logprobs):
        problems.append(
            f"line {line_no}: {len(tokens)} tokens but {len(logprobs)} logprobs"
        )
    for value in logprobs:
        if not isinstance(value, (int, float)) or math.isnan(value) or value > 1e-6:
            problems.append(f"line {line_no}: invalid logprob {value!r}")
            break


def _check_qa_pred_line(row: Mapping, line_no: int, problems: list[str]) -> None:
    if "id" not in row or "prediction" not in row:
        problems.append(f"line {line_no}: expected fields id, prediction")
    elif not isinstance(row["prediction"], str):
        problems.append(f"line {line_no}: prediction is not a string")


def _check_nli_pred_line(row: Mapping, line_no: int, problems: list[str]) -> None:
    if "id" not in row or "label" not in row:
        problems.append(f"line {line_no}: expected fields id, label")
    elif row["label"] not in NLI_LABELS:
        problems.append(f"line {line_no}: unknown label {row['label']!r}")


def validate_interchange(path: str | Path, kind: str) -> list[str]:
    """Schema/invariant check of an interchange file; [] means ok.

    The input is never mutated.  Unreadable paths raise ``OSError``.
    """
    if kind not in INTERCHANGE_KINDS:
        raise ValueError(f"unknown interchange kind {kind!r}")
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    problems: list[str] = []

    if kind in ("pll", "qa_pred", "nli_pred"):
        checker = {"pll": _check_pll_line, "qa_pred": _check_qa_pred_line, "nli_pred": _check_nli_pred_line}[kind]
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append(f"line {line_no}: invalid JSON ({exc.msg})")
                continue
            if not isinstance(row, dict):
                problems.append(f"line {line_no}: expected a JSON object")
                continue
            checker(row, line_no, problems)
        return problems

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"invalid JSON: {exc.msg}"]

    if kind == "corpus_manifest":
        try:
            manifest = CorpusManifest.from_dict(data)
        except (KeyError, TypeError, ValueError, DataError) as exc:
            return [f"manifest: {exc}"]
        if len(manifest.content_digest) != 64 or any(
            c not in "0123456789abcdef" for c in manifest.content_digest
        ):
            problems.append("manifest: content_digest is not a sha256 hex string")
        return problems

    # kind == "result"
    try:
        EvalResult.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        return [f"result: {exc}"]
    return problems


# --- run registry --------------------------------------------------------------


@dataclass
class RunRecord:
    run_id: str
    status: str = "planned"
    artifacts: dict[str, str] = field(default_factory=dict)
    timestamps: dict[str, str] = field(default_factory=dict)


class RunRegistry:
    """Append-only JSONL journal of run-state transitions plus a derived view.

    A single writer appends; any number of readers may replay the journal.
    """

    STATUSES = ("planned", "scored", "reported")

    def __init__(self, journal_path: str | Path) -> None:
        self.journal_path = Path(journal_path)

    def _append(self, run_id: str, status: str, artifacts: Mapping[str, str] | None = None) -> None:
        event = {
            "run_id": run_id,
            "status": status,
            "artifacts": dict(artifacts or {}),
            "at": datetime.now(timezone.utc).isoformat(),
        }
        self.journal_path.parent.mkdir(parents=True, exist_ok=True)
        with self.journal_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event) + "\n")

    def record_plan(self, plan: ExperimentPlan) -> None:
        for run in plan.runs:
            self._append(run.run_id, "planned")

    def mark_scored(self, run_id: str, artifacts: Mapping[str, str]) -> None:
        """Artifacts map interchange kind -> path; all must exist and validate."""
        for kind, artifact_path in artifacts.items():
            if kind not in INTERCHANGE_KINDS:
                raise ValueError(f"unknown artifact kind {kind!r}")
            problems = validate_interchange(artifact_path, kind)
            if problems:
                raise DataError(
                    f"run {run_id!r}: artifact {artifact_path} failed validation: {problems[:3]}"
                )
        self._append(run_id, "scored", artifacts)

    def mark_reported(self, run_id: str) -> None:
        self._append(run_id, "reported")

    def snapshot(self) -> dict[str, RunRecord]:
        records: dict[str, RunRecord] = {}
        if not self.journal_path.exists():
            return records
        with self.journal_path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                record = records.setdefault(event["run_id"], RunRecord(event["run_id"]))
                record.status = event["status"]
                record.artifacts.update(event.get("artifacts", {}))
                record.timestamps[event["status"]] = event["at"]
        return records

    def write_snapshot(self, path: str | Path) -> None:
        snapshot = {
            run_id: {
                "status": rec.status,
                "artifacts": rec.artifacts,
                "timestamps": rec.timestamps,
            }
            for run_id, rec in sorted(self.snapshot().items())
        }
        Path(path).write_text(json.dumps(snapshot, indent=2) + "\n", encoding="utf-8")
