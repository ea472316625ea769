"""Model exporters producing the toolkit's interchange files.

Three export paths: per-token pseudo-log-likelihood scores for minimal
pairs, extractive QA span predictions, and 3-way NLI label predictions.
Each writes JSONL in the exact shape the scoring side consumes, plus a
sidecar ``<out>.meta.json`` recording the checkpoint and any skips.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from transformers import (
    AutoModelForMaskedLM,
    AutoModelForQuestionAnswering,
    AutoModelForSequenceClassification,
    AutoTokenizer,
)

from .config import BridgeConfig

NLI_LABELS = ("entailment", "neutral", "contradiction")  # fallback id order


class IdMismatchError(RuntimeError):
    """Prediction ids disagree with the gold file; carries a diff summary."""


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _write_jsonl(path: str | Path, rows: list[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _write_meta(out_path: str | Path, payload: dict) -> None:
    meta_path = Path(str(out_path) + ".meta.json")
    meta_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _prepare(cfg: BridgeConfig):
    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    return tokenizer


def export_pll(pairs_path: str | Path, cfg: BridgeConfig, out_path: str | Path) -> Path:
    """Score each minimal-pair sentence by masking one position at a time.

    For every non-special token position the position is replaced with the
    mask token and the log-probability of the original token is recorded.
    Sentences longer than ``cfg.max_length`` are skipped (recorded in the
    sidecar), never aborted on.
    """
    tokenizer = _prepare(cfg)
    model = AutoModelForMaskedLM.from_pretrained(cfg.model).to(cfg.device)
    model.eval()
    if tokenizer.mask_token_id is None:
        raise ValueError(f"{cfg.model} has no mask token; not a masked LM")

    rows = []
    skipped = []
    for pair in _read_jsonl(pairs_path):
        for role in ("good", "bad"):
            sentence = pair[role]
            encoding = tokenizer(sentence, return_special_tokens_mask=True)
            input_ids = encoding["input_ids"]
            if len(input_ids) > cfg.max_length:
                skipped.append(
                    {"pair_id": pair["pair_id"], "role": role, "length": len(input_ids)}
                )
                continue
            positions = [
                i for i, special in enumerate(encoding["special_tokens_mask"]) if not special
            ]
            logprobs = []
            base = torch.tensor(input_ids)
            with torch.no_grad():
                for start in range(0, len(positions), cfg.batch_size):
                    chunk = positions[start : start + cfg.batch_size]
                    batch = base.repeat(len(chunk), 1)
                    for row_index, position in enumerate(chunk):
                        batch[row_index, position] = tokenizer.mask_token_id
                    logits = model(input_ids=batch.to(cfg.device)).logits
                    log_probs = torch.log_softmax(logits, dim=-1)
                    for row_index, position in enumerate(chunk):
                        logprobs.append(
                            log_probs[row_index, position, input_ids[position]].item()
                        )
            tokens = tokenizer.convert_ids_to_tokens([input_ids[i] for i in positions])
            rows.append(
                {
                    "pair_id": pair["pair_id"],
                    "role": role,
                    "phenomenon": pair.get("phenomenon", ""),
                    "tokens": tokens,
                    "logprobs": logprobs,
                }
            )
    _write_jsonl(out_path, rows)
    _write_meta(out_path, {"model": cfg.model, "masking": "per_subword", "skipped": skipped})
    return Path(out_path)


def _load_squad(path: str | Path) -> list[dict]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    questions = []
    for article in data["data"]:
        for paragraph in article["paragraphs"]:
            for qa in paragraph["qas"]:
                questions.append(
                    {"id": qa["id"], "question": qa["question"], "context": paragraph["context"]}
                )
    return questions


def export_qa_predictions(
    dataset_path: str | Path,
    cfg: BridgeConfig,
    out_path: str | Path,
    gold_path: str | Path | None = None,
    max_answer_tokens: int = 30,
) -> Path:
    """Predict one contiguous context span per question.

    With ``gold_path`` given, the dataset's question ids must match the
    gold file's exactly; a mismatch aborts with a diff summary.
    """
    questions = _load_squad(dataset_path)
    if gold_path is not None:
        gold_ids = {q["id"] for q in _load_squad(gold_path)}
        have_ids = {q["id"] for q in questions}
        if gold_ids != have_ids:
            missing = sorted(gold_ids - have_ids)[:5]
            extra = sorted(have_ids - gold_ids)[:5]
            raise IdMismatchError(
                f"id mismatch vs gold: {len(gold_ids - have_ids)} missing "
                f"(e.g. {missing}), {len(have_ids - gold_ids)} extra (e.g. {extra})"
            )

    rows = []
    if questions:
        tokenizer = _prepare(cfg)
        model = AutoModelForQuestionAnswering.from_pretrained(cfg.model).to(cfg.device)
        model.eval()
        with torch.no_grad():
            for start in range(0, len(questions), cfg.batch_size):
                batch = questions[start : start + cfg.batch_size]
                encoding = tokenizer(
                    [q["question"] for q in batch],
                    [q["context"] for q in batch],
                    truncation="only_second",
                    max_length=cfg.max_length,
                    padding=True,
                    return_offsets_mapping=True,
                    return_tensors="pt",
                )
                offsets = encoding.pop("offset_mapping")
                output = model(**{k: v.to(cfg.device) for k, v in encoding.items()})
                for row_index, question in enumerate(batch):
                    sequence_ids = encoding.sequence_ids(row_index)
                    context_positions = [
                        i for i, s in enumerate(sequence_ids) if s == 1
                    ]
                    if not context_positions:
                        rows.append({"id": question["id"], "prediction": ""})
                        continue
                    start_scores = output.start_logits[row_index]
                    end_scores = output.end_logits[row_index]
                    best = None
                    for i in context_positions:
                        for j in context_positions:
                            if j < i or j - i + 1 > max_answer_tokens:
                                continue
                            score = (start_scores[i] + end_scores[j]).item()
                            if best is None or score > best[0]:
                                best = (score, i, j)
                    _, i, j = best
                    char_start = int(offsets[row_index][i][0])
                    char_end = int(offsets[row_index][j][1])
                    prediction = question["context"][char_start:char_end]
                    rows.append({"id": question["id"], "prediction": prediction})
    _write_jsonl(out_path, rows)
    _write_meta(out_path, {"model": cfg.model, "n_questions": len(rows)})
    return Path(out_path)


def export_nli_predictions(
    dataset_path: str | Path, cfg: BridgeConfig, out_path: str | Path
) -> Path:
    """Classify premise/hypothesis pairs into the 3-way entailment labels."""
    examples = _read_jsonl(dataset_path)
    rows = []
    if examples:
        tokenizer = _prepare(cfg)
        model = AutoModelForSequenceClassification.from_pretrained(
            cfg.model, num_labels=len(NLI_LABELS)
        ).to(cfg.device)
        model.eval()
        id2label = {
            i: label.lower() for i, label in getattr(model.config, "id2label", {}).items()
        }
        if set(id2label.values()) != set(NLI_LABELS):
            id2label = dict(enumerate(NLI_LABELS))
        with torch.no_grad():
            for start in range(0, len(examples), cfg.batch_size):
                batch = examples[start : start + cfg.batch_size]
                encoding = tokenizer(
                    [e["premise"] for e in batch],
                    [e["hypothesis"] for e in batch],
                    truncation=True,
                    max_length=cfg.max_length,
                    padding=True,
                    return_tensors="pt",
                )
                logits = model(**{k: v.to(cfg.device) for k, v in encoding.items()}).logits
                for example, label_id in zip(batch, logits.argmax(dim=-1).tolist()):
                    rows.append({"id": example["id"], "label": id2label[label_id]})
    _write_jsonl(out_path, rows)
    _write_meta(out_path, {"model": cfg.model, "n_examples": len(rows)})
    return Path(out_path)
